#include "okpose/pose/pose_net.hpp"

#include <cmath>
#include <stdexcept>

#include "okpose/geom/geom.hpp"

namespace okpose::pose {

using nn::TensorPtr;

PoseGestureNet::PoseGestureNet(nn::Rng& rng)
    : rgb1(3, 16, 3, 2, 1, rng),
      rgb2(16, 32, 3, 2, 1, rng),
      lmk1(geom::kNumHandLandmarks, 24, 3, 1, 1, rng),
      lmk2(24, 32, 3, 1, 1, rng),
      value1(64, 32, 1, 1, 0, rng),
      value2(32, 32, 1, 1, 0, rng),
      gate1(64, 32, 1, 1, 0, rng),
      gate2(32, 32, 1, 1, 0, rng),
      mid1(32, 64, 3, 2, 1, rng),
      mid2(64, 96, 3, 2, 1, rng),
      tail_local(96, kFeatureDim, 3, 2, 1, rng),
      tail_global(96, kFeatureDim, 3, 2, 1, rng),
      lm_fc1(kFeatureDim, 96, rng),
      lm_fc2(96, 3 * geom::kNumHandLandmarks, rng),
      gs_fc1(kFeatureDim, 96, rng),
      gs_fc2(96, 1, rng),
      tr_fc1(kFeatureDim, 96, rng),
      tr_fc2(96, 3, rng) {}

FusionParts PoseGestureNet::fuse(const TensorPtr& rgb, const TensorPtr& heatmaps) const {
    const int s = kCropSize;
    if (rgb->rank() != 4 || rgb->dim(0) != 1 || rgb->dim(1) != 3 || rgb->dim(2) != s ||
        rgb->dim(3) != s) {
        throw std::invalid_argument("pose net: rgb must be [1,3,64,64], got " + nn::shape_str(rgb->shape));
    }
    if (heatmaps->rank() != 4 || heatmaps->dim(0) != 1 ||
        heatmaps->dim(1) != geom::kNumHandLandmarks || heatmaps->dim(2) != s / 4 ||
        heatmaps->dim(3) != s / 4) {
        throw std::invalid_argument("pose net: heatmaps must be [1,21,16,16], got " +
                                    nn::shape_str(heatmaps->shape));
    }
    auto a = nn::relu(rgb2(nn::relu(rgb1(rgb))));       // [1,32,16,16]
    auto b = nn::relu(lmk2(nn::relu(lmk1(heatmaps))));  // [1,32,16,16]
    auto joint = nn::concat_channels(a, b);             // [1,64,16,16]

    FusionParts parts;
    parts.value = value2(nn::relu(value1(joint)));
    parts.gate = nn::sigmoid(gate2(nn::relu(gate1(joint))));
    parts.fused = nn::hadamard(parts.value, parts.gate);
    return parts;
}

PoseGestureOutput PoseGestureNet::forward(const TensorPtr& rgb, const TensorPtr& heatmaps) const {
    auto fused = fuse(rgb, heatmaps).fused;
    auto x = nn::relu(mid1(fused));
    x = nn::relu(mid2(x));  // [1,96,4,4]

    auto fl = nn::reshape(nn::global_avg_pool(nn::relu(tail_local(x))), {1, kFeatureDim});
    auto fg = nn::reshape(nn::global_avg_pool(nn::relu(tail_global(x))), {1, kFeatureDim});

    PoseGestureOutput out;
    out.f_local = fl;
    out.f_global = fg;
    out.landmarks3d = lm_fc2(nn::relu(lm_fc1(fl)));
    out.gesture_logit = gs_fc2(nn::relu(gs_fc1(fl)));
    out.cam_translation = tr_fc2(nn::relu(tr_fc1(fg)));
    return out;
}

void PoseGestureNet::open_fusion_gate() {
    for (auto& v : gate2.weight->data) v = 0.0f;
    // sigmoid(25) rounds to exactly 1.0f, so the gate multiplies by 1.
    for (auto& v : gate2.bias->data) v = 25.0f;
}

std::vector<nn::NamedParam> PoseGestureNet::params() const {
    std::vector<nn::NamedParam> out = backbone_params();
    for (auto& p : gesture_head_params()) out.push_back(p);
    return out;
}

std::vector<nn::NamedParam> PoseGestureNet::gesture_head_params() const {
    std::vector<nn::NamedParam> out;
    gs_fc1.collect("gesture.fc1", out);
    gs_fc2.collect("gesture.fc2", out);
    return out;
}

std::vector<nn::NamedParam> PoseGestureNet::backbone_params() const {
    std::vector<nn::NamedParam> out;
    rgb1.collect("rgb1", out);
    rgb2.collect("rgb2", out);
    lmk1.collect("lmk1", out);
    lmk2.collect("lmk2", out);
    value1.collect("fuse.value1", out);
    value2.collect("fuse.value2", out);
    gate1.collect("fuse.gate1", out);
    gate2.collect("fuse.gate2", out);
    mid1.collect("mid1", out);
    mid2.collect("mid2", out);
    tail_local.collect("tail_local", out);
    tail_global.collect("tail_global", out);
    lm_fc1.collect("landmarks.fc1", out);
    lm_fc2.collect("landmarks.fc2", out);
    tr_fc1.collect("translation.fc1", out);
    tr_fc2.collect("translation.fc2", out);
    return out;
}

double gesture_probability(const PoseGestureOutput& out) {
    const double x = out.gesture_logit->data.at(0);
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace okpose::pose
