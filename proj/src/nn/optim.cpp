#include "okpose/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace okpose::nn {

Adam::Adam(std::vector<NamedParam> params, float lr, float beta1, float beta2, float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        const size_t n = params_[i].tensor->data.size();
        m_[i].assign(n, 0.0f);
        v_[i].assign(n, 0.0f);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i].tensor;
        if (p.grad.size() != p.data.size()) {
            throw std::runtime_error("adam: missing gradient for parameter '" + params_[i].name +
                                     "'");
        }
        float* m = m_[i].data();
        float* v = v_[i].data();
        for (size_t j = 0; j < p.data.size(); ++j) {
            const float g = p.grad[j];
            if (!std::isfinite(g)) {
                throw std::runtime_error("adam: non-finite gradient in parameter '" +
                                         params_[i].name + "'");
            }
            m[j] = beta1_ * m[j] + (1.0f - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0f - beta2_) * g * g;
            const double mh = m[j] / bc1;
            const double vh = v[j] / bc2;
            p.data[j] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + eps_));
        }
    }
}

void Adam::zero_grad() {
    for (auto& np : params_) np.tensor->zero_grad();
}

}  // namespace okpose::nn
