#include "okpose/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace okpose {

Image::Image(int h_, int w_, int c_, float fill)
    : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {
    if (h_ < 1 || w_ < 1 || (c_ != 1 && c_ != 3)) {
        throw std::invalid_argument("image: invalid dimensions " + std::to_string(h_) + "x" +
                                    std::to_string(w_) + "x" + std::to_string(c_));
    }
}

float Image::sample(int ch, double x, double y) const {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto px = [&](int yy, int xx) -> double {
        if (xx < 0 || xx >= w || yy < 0 || yy >= h) return 0.0;
        return at(ch, yy, xx);
    };
    const double top = px(y0, x0) * (1.0 - fx) + px(y0, x0 + 1) * fx;
    const double bot = px(y0 + 1, x0) * (1.0 - fx) + px(y0 + 1, x0 + 1) * fx;
    return static_cast<float>(top * (1.0 - fy) + bot * fy);
}

void Image::clamp01() {
    for (auto& v : data) v = std::clamp(v, 0.0f, 1.0f);
}

uint16_t depth_at(const DepthImage& d, int u, int v) {
    if (u < 0 || u >= d.w || v < 0 || v >= d.h) return 0;
    if (d.at(v, u) != 0) return d.at(v, u);
    std::vector<uint16_t> window;
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            const int y = v + dy, x = u + dx;
            if (x < 0 || x >= d.w || y < 0 || y >= d.h) continue;
            if (d.at(y, x) != 0) window.push_back(d.at(y, x));
        }
    }
    if (window.empty()) return 0;
    std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
    return window[window.size() / 2];
}

nn::TensorPtr image_to_tensor(const Image& img) {
    auto t = nn::Tensor::zeros({1, img.c, img.h, img.w});
    t->data = img.data;
    return t;
}

Image tensor_to_image(const nn::Tensor& t) {
    int c, h, w;
    if (t.rank() == 4 && t.dim(0) == 1) {
        c = t.dim(1);
        h = t.dim(2);
        w = t.dim(3);
    } else if (t.rank() == 3) {
        c = t.dim(0);
        h = t.dim(1);
        w = t.dim(2);
    } else {
        throw std::invalid_argument("tensor_to_image: expected [1,C,H,W] or [C,H,W], got " +
                                    nn::shape_str(t.shape));
    }
    Image img(h, w, c);
    img.data = t.data;
    return img;
}

}  // namespace okpose
