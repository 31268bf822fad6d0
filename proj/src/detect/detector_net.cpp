#include "okpose/detect/detector_net.hpp"

#include <stdexcept>

namespace okpose::detect {

using nn::TensorPtr;

DetectorNet::DetectorNet(nn::Rng& rng, const GridSpec& grid)
    : c1(3, 8, 3, 2, 1, rng),
      c2(8, 16, 3, 2, 1, rng),
      c3(16, 32, 3, 2, 1, rng),
      c4(32, 48, 3, 2, 1, rng),
      c5(48, 64, 3, 1, 1, rng),
      head(64, static_cast<int>(grid.anchors.size()) * kChannelsPerAnchor, 1, 1, 0, rng) {}

TensorPtr DetectorNet::forward(const TensorPtr& rgb) const {
    if (rgb->rank() != 4 || rgb->dim(0) != 1 || rgb->dim(1) != 3) {
        throw std::invalid_argument("detector: expected input shaped [1,3,H,W], got " +
                                    nn::shape_str(rgb->shape));
    }
    auto x = nn::relu(c1(rgb));
    x = nn::relu(c2(x));
    x = nn::relu(c3(x));
    x = nn::relu(c4(x));
    x = nn::relu(c5(x));
    return head(x);
}

std::vector<nn::NamedParam> DetectorNet::params() const {
    std::vector<nn::NamedParam> out;
    c1.collect("c1", out);
    c2.collect("c2", out);
    c3.collect("c3", out);
    c4.collect("c4", out);
    c5.collect("c5", out);
    head.collect("head", out);
    return out;
}

}  // namespace okpose::detect
