#pragma once

#include <cstdint>
#include <vector>

#include "okpose/nn/tensor.hpp"

namespace okpose {

/// Planar (channel-major) float image with values in [0,1].
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> data;  // c * h * w, channel plane by plane

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f);

    float& at(int ch, int y, int x) { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }
    float at(int ch, int y, int x) const {
        return data[(static_cast<size_t>(ch) * h + y) * w + x];
    }

    /// Bilinear sample at real coordinates; pixel sample points sit at integer
    /// coordinates. Out-of-bounds reads return 0.
    float sample(int ch, double x, double y) const;

    void clamp01();
};

/// Per-pixel depth in sensor units (0 = invalid reading).
struct DepthImage {
    int h = 0;
    int w = 0;
    std::vector<uint16_t> units;

    DepthImage() = default;
    DepthImage(int h, int w) : h(h), w(w), units(static_cast<size_t>(h) * w, 0) {}

    uint16_t at(int y, int x) const { return units[static_cast<size_t>(y) * w + x]; }
    uint16_t& at(int y, int x) { return units[static_cast<size_t>(y) * w + x]; }
};

/// Depth lookup at a pixel: the pixel itself when valid, otherwise the median
/// of valid readings in the surrounding 5x5 window. Returns 0 when nothing in
/// the window is valid.
uint16_t depth_at(const DepthImage& d, int u, int v);

/// [1,C,H,W] tensor view of the image (copy).
nn::TensorPtr image_to_tensor(const Image& img);

/// Inverse of image_to_tensor for a [1,C,H,W] or [C,H,W] tensor.
Image tensor_to_image(const nn::Tensor& t);

}  // namespace okpose
