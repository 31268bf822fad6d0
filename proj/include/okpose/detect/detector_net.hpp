#pragma once

#include <vector>

#include "okpose/detect/detect.hpp"
#include "okpose/nn/layers.hpp"

namespace okpose::detect {

/// Small fully-convolutional detector: 224x224 RGB in, one raw anchor map out
/// ([1, anchors*channels_per_anchor, 14, 14]) matching the default GridSpec.
struct DetectorNet {
    nn::Conv2d c1, c2, c3, c4, c5, head;

    explicit DetectorNet(nn::Rng& rng, const GridSpec& grid = {});
    nn::TensorPtr forward(const nn::TensorPtr& rgb) const;
    std::vector<nn::NamedParam> params() const;
};

}  // namespace okpose::detect
