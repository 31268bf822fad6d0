#pragma once

#include <vector>

#include "okpose/nn/layers.hpp"

namespace okpose::landmark {

/// Encoder-decoder that maps a hand crop ([1,3,S,S]) to one heatmap per hand
/// landmark at quarter resolution ([1,21,S/4,S/4]).
struct LandmarkNet {
    nn::Conv2d enc1, enc2, enc3, enc4;
    nn::ConvTranspose2d dec1, dec2;

    explicit LandmarkNet(nn::Rng& rng);
    nn::TensorPtr forward(const nn::TensorPtr& crop) const;
    std::vector<nn::NamedParam> params() const;
};

}  // namespace okpose::landmark
