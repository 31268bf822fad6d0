#include "okpose/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace okpose::nn {

void kaiming_uniform_(Tensor& t, int fan_in, Rng& rng) {
    if (fan_in <= 0) throw std::invalid_argument("kaiming_uniform_: fan_in must be positive");
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
}

namespace {

TensorPtr make_param(std::vector<int> shape) {
    auto t = Tensor::zeros(std::move(shape));
    t->requires_grad = true;
    return t;
}

}  // namespace

Conv2d::Conv2d(int cin, int cout, int k, int stride_, int pad_, Rng& rng)
    : weight(make_param({cout, cin, k, k})), bias(make_param({cout})), stride(stride_), pad(pad_) {
    kaiming_uniform_(*weight, cin * k * k, rng);
    kaiming_uniform_(*bias, cin * k * k, rng);
}

void Conv2d::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

ConvTranspose2d::ConvTranspose2d(int cin, int cout, int k, int stride_, int pad_, Rng& rng)
    : weight(make_param({cin, cout, k, k})), bias(make_param({cout})), stride(stride_), pad(pad_) {
    kaiming_uniform_(*weight, cin * k * k, rng);
    kaiming_uniform_(*bias, cin * k * k, rng);
}

void ConvTranspose2d::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

Linear::Linear(int din, int dout, Rng& rng)
    : weight(make_param({dout, din})), bias(make_param({dout})) {
    kaiming_uniform_(*weight, din, rng);
    kaiming_uniform_(*bias, din, rng);
}

void Linear::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

}  // namespace okpose::nn
