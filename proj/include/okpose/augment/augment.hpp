#pragma once

#include <array>
#include <string>
#include <vector>

#include "okpose/image.hpp"
#include "okpose/nn/rng.hpp"

namespace okpose::augment {

struct AugmentConfig {
    std::vector<int> scales = {1, 2, 4, 8};
    double brightness_lo = 0.75;
    double brightness_hi = 1.25;
    double noise_sigma = 0.02;
    double rotation_jitter_deg = 5.0;  // symmetric range [-x, x]
    std::vector<std::array<float, 3>> glove_colors;
    double p_glove = 0.0;

    void validate() const;
};

/// One concrete augmentation draw, loggable and replayable.
struct AugmentParams {
    int s = 1;
    double b = 1.0;
    double rotation_deg = 0.0;
    double sigma = 0.0;
    bool glove = false;
    std::array<float, 3> glove_color = {0, 0, 0};

    std::string to_line() const;
    static AugmentParams from_line(const std::string& line);
};

/// Sensor degradation: brighten by b, box-average downsample by s, clamp at 1,
/// add per-low-res-pixel Gaussian noise, nearest-neighbor upsample back, final
/// clamp to [0,1]. Output size equals input size.
/// Throws when the image is smaller than s in either dimension.
Image lowres_lowlight(const Image& img, int s, double b, nn::Rng& rng, double sigma);

/// Alpha blend of a solid color into the masked region; identity outside.
/// Throws on mask shape mismatch or alpha outside (0, 1].
Image glove_overlay(const Image& img, const Image& mask, const std::array<float, 3>& color,
                    float alpha);

/// Draws one parameter record from the augmentation substream. Exactly four
/// scalar draws plus one color pick per call regardless of outcomes, so draw
/// counts never depend on sampled values.
AugmentParams sample_augmentation(const AugmentConfig& cfg, nn::Rng& rng);

}  // namespace okpose::augment
