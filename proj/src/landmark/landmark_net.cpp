#include "okpose/landmark/landmark_net.hpp"

#include <stdexcept>

#include "okpose/geom/geom.hpp"

namespace okpose::landmark {

using nn::TensorPtr;

LandmarkNet::LandmarkNet(nn::Rng& rng)
    : enc1(3, 12, 3, 2, 1, rng),
      enc2(12, 24, 3, 2, 1, rng),
      enc3(24, 48, 3, 2, 1, rng),
      enc4(48, 64, 3, 2, 1, rng),
      dec1(64, 32, 4, 2, 1, rng),
      dec2(32, geom::kNumHandLandmarks, 4, 2, 1, rng) {}

TensorPtr LandmarkNet::forward(const TensorPtr& crop) const {
    if (crop->rank() != 4 || crop->dim(0) != 1 || crop->dim(1) != 3) {
        throw std::invalid_argument("landmark net: expected input shaped [1,3,S,S], got " +
                                    nn::shape_str(crop->shape));
    }
    auto x = nn::relu(enc1(crop));
    x = nn::relu(enc2(x));
    x = nn::relu(enc3(x));
    x = nn::relu(enc4(x));
    x = nn::relu(dec1(x));
    return dec2(x);
}

std::vector<nn::NamedParam> LandmarkNet::params() const {
    std::vector<nn::NamedParam> out;
    enc1.collect("enc1", out);
    enc2.collect("enc2", out);
    enc3.collect("enc3", out);
    enc4.collect("enc4", out);
    dec1.collect("dec1", out);
    dec2.collect("dec2", out);
    return out;
}

}  // namespace okpose::landmark
