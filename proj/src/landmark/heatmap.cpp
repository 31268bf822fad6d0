#include "okpose/landmark/heatmap.hpp"

#include <cmath>
#include <stdexcept>

namespace okpose::landmark {

nn::TensorPtr encode_heatmap(const geom::HandLandmarks2D& lms, int crop_size, double sigma) {
    if (crop_size < kHeatmapStride || crop_size % kHeatmapStride != 0) {
        throw std::invalid_argument("encode_heatmap: crop size must be a positive multiple of " +
                                    std::to_string(kHeatmapStride));
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("encode_heatmap: sigma must be positive");
    const int s = crop_size / kHeatmapStride;
    auto hm = nn::Tensor::zeros({geom::kNumHandLandmarks, s, s});
    for (int k = 0; k < geom::kNumHandLandmarks; ++k) {
        const auto& lm = lms[k];
        if (lm.conf <= 0.0) continue;
        if (!std::isfinite(lm.x) || !std::isfinite(lm.y)) {
            throw std::invalid_argument("encode_heatmap: non-finite keypoint");
        }
        const double hx = to_heatmap_coord(lm.x);
        const double hy = to_heatmap_coord(lm.y);
        float* plane = hm->data.data() + static_cast<size_t>(k) * s * s;
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                const double d2 = (x - hx) * (x - hx) + (y - hy) * (y - hy);
                plane[y * s + x] = static_cast<float>(std::exp(-d2 / (2.0 * sigma * sigma)));
            }
        }
    }
    return hm;
}

geom::HandLandmarks2D decode_heatmap(const nn::Tensor& hm, int crop_size) {
    if (hm.rank() != 3 || hm.dim(0) != geom::kNumHandLandmarks || hm.dim(1) != hm.dim(2)) {
        throw std::invalid_argument("decode_heatmap: expected [21, S, S], got " +
                                    nn::shape_str(hm.shape));
    }
    const int s = hm.dim(1);
    geom::HandLandmarks2D out{};
    for (int k = 0; k < geom::kNumHandLandmarks; ++k) {
        const float* plane = hm.data.data() + static_cast<size_t>(k) * s * s;
        int best_x = 0, best_y = 0;
        float best = plane[0];
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                if (plane[y * s + x] > best) {
                    best = plane[y * s + x];
                    best_x = x;
                    best_y = y;
                }
            }
        }
        if (best <= 0.0f) {
            out[k] = {crop_size * 0.5, crop_size * 0.5, 0.0};
            continue;
        }
        auto value = [&](int y, int x) -> float {
            if (x < 0 || x >= s || y < 0 || y >= s) return 0.0f;
            return plane[y * s + x];
        };
        double hx = best_x, hy = best_y;
        const float right = value(best_y, best_x + 1), left = value(best_y, best_x - 1);
        if (right > left) {
            hx += 0.25;
        } else if (left > right) {
            hx -= 0.25;
        }
        const float down = value(best_y + 1, best_x), up = value(best_y - 1, best_x);
        if (down > up) {
            hy += 0.25;
        } else if (up > down) {
            hy -= 0.25;
        }
        out[k] = {to_crop_coord(hx), to_crop_coord(hy), static_cast<double>(best)};
    }
    return out;
}

}  // namespace okpose::landmark
