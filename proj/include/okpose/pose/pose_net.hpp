#pragma once

#include <vector>

#include "okpose/nn/layers.hpp"

namespace okpose::pose {

/// Everything the pose-gesture network predicts for one hand crop.
struct PoseGestureOutput {
    nn::TensorPtr landmarks3d;      ///< [1,63] wrist-relative, roll-normalized 3D landmarks (m)
    nn::TensorPtr gesture_logit;    ///< [1,1] raw logit; sigmoid gives the okay-gesture probability
    nn::TensorPtr cam_translation;  ///< [1,3] wrist position in the crop-camera frame (m)
    nn::TensorPtr f_local;          ///< [1,128] feature used by the landmark and gesture heads
    nn::TensorPtr f_global;         ///< [1,128] feature used by the translation head
};

/// Intermediate tensors of the gated fusion block, exposed for inspection.
struct FusionParts {
    nn::TensorPtr value;  ///< raw value branch, [1,32,S/4,S/4]
    nn::TensorPtr gate;   ///< sigmoid gate branch, same shape
    nn::TensorPtr fused;  ///< value * gate (elementwise)
};

/// Two-stream network over a hand crop: an RGB stream and a landmark-heatmap
/// stream are merged by a multiplicative gate, then split into a local feature
/// (3D landmarks + gesture) and a global feature (camera-frame translation).
struct PoseGestureNet {
    static constexpr int kCropSize = 64;
    static constexpr int kFeatureDim = 128;

    nn::Conv2d rgb1, rgb2;        // RGB stream: 3 -> 16 -> 32, stride 2 each
    nn::Conv2d lmk1, lmk2;        // heatmap stream: 21 -> 24 -> 32, stride 1
    nn::Conv2d value1, value2;    // 1x1 value branch of the fusion gate
    nn::Conv2d gate1, gate2;      // 1x1 gate branch (sigmoid)
    nn::Conv2d mid1, mid2;        // shared trunk after fusion
    nn::Conv2d tail_local, tail_global;
    nn::Linear lm_fc1, lm_fc2;    // f_local -> 63
    nn::Linear gs_fc1, gs_fc2;    // f_local -> 1
    nn::Linear tr_fc1, tr_fc2;    // f_global -> 3

    explicit PoseGestureNet(nn::Rng& rng);

    /// rgb: [1,3,64,64]; heatmaps: [1,21,16,16].
    PoseGestureOutput forward(const nn::TensorPtr& rgb, const nn::TensorPtr& heatmaps) const;

    /// Runs only the two streams and the fusion gate, exposing its pieces.
    FusionParts fuse(const nn::TensorPtr& rgb, const nn::TensorPtr& heatmaps) const;

    /// Forces the fusion gate fully open: gate output becomes exactly 1, so the
    /// fused tensor equals the value branch bit for bit. Used to compare the
    /// gated and ungated variants without touching any other parameter.
    void open_fusion_gate();

    std::vector<nn::NamedParam> params() const;
    /// Parameters of the gesture head only (the part trained in stage 2).
    std::vector<nn::NamedParam> gesture_head_params() const;
    /// Everything except the gesture head (frozen in stage 2).
    std::vector<nn::NamedParam> backbone_params() const;
};

/// Okay-gesture probability for a forward result.
double gesture_probability(const PoseGestureOutput& out);

}  // namespace okpose::pose
