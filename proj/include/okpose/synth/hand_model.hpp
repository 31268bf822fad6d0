#pragma once

#include <array>
#include <vector>

#include "okpose/geom/geom.hpp"

namespace okpose::synth {

/// 3D landmark set in the canonical hand frame: wrist at the origin, fingers
/// extending along +y (screen-down when the roll angle is zero), x to the
/// right, z pointing away from the camera. Units are meters.
using HandLandmarks3D = std::array<geom::Point3, geom::kNumHandLandmarks>;

/// Pose parameters of the stylized hand.
struct HandConfig {
    double okay_param = 0.0;  ///< 0 = open hand ... 1 = thumb-index ring fully closed
    double scale = 1.0;       ///< multiplies every canonical length (~0.93..1.07)
    std::array<double, 3> finger_curl{0.0, 0.0, 0.0};  ///< middle/ring/pinky, 0..1
};

/// The okay gesture is labeled positive when okay_param reaches this value.
constexpr double kOkayLabelThreshold = 0.8;

/// Thumb-tip / index-tip separation contract of the model (meters):
/// closed ring stays below kOkayClosedDist, open hand above kOkayOpenDist.
constexpr double kOkayClosedDist = 0.005;
constexpr double kOkayOpenDist = 0.05;

/// Canonical-frame landmark positions for one pose.
HandLandmarks3D hand_landmarks(const HandConfig& config);

/// A skeleton bone rendered as one capsule: landmark index pair + radius (m).
struct Bone {
    int a;
    int b;
    double radius;
};

/// The capsule decomposition of the hand (palm webbing included).
const std::vector<Bone>& hand_bones();

}  // namespace okpose::synth
