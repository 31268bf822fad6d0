#pragma once

#include <vector>

#include "okpose/detect/detect.hpp"
#include "okpose/geom/geom.hpp"
#include "okpose/image.hpp"
#include "okpose/nn/rng.hpp"
#include "okpose/synth/hand_model.hpp"

namespace okpose::synth {

/// Ground truth for one rendered hand.
struct HandTruth {
    geom::HandLandmarks2D landmarks2d{};  // image coords, confidence 1
    HandLandmarks3D landmarks3d_cam{};    // camera frame, meters
    HandLandmarks3D landmarks3d_norm{};   // wrist-relative, roll-normalized (training target)
    geom::BBox box;                       // landmark extents plus padding
    double roll = 0.0;                    // in-plane orientation of the projected skeleton
    double okay_param = 0.0;
    bool okay = false;        // okay_param >= kOkayLabelThreshold
    int body_index = -1;      // owner body (index into SceneTruth::bodies)
    geom::Vec2 o_center{};    // image coords of the thumb-tip/index-tip midpoint
    double o_depth_m = 0.0;   // camera-frame depth of that midpoint
};

struct BodyTruth {
    geom::BBox box;
    bool technician = false;
    double bed_overlap = 0.0;  // fraction of the body box covered by the bed
};

struct SceneTruth {
    std::vector<HandTruth> hands;
    std::vector<BodyTruth> bodies;
    geom::BBox bed;
    bool gesture_present = false;  // some technician hand shows the okay gesture
    int gesture_hand = -1;         // that hand's index, or -1
};

/// One rendered sample: color image, per-pixel hand coverage, depth map, truth.
struct SceneSample {
    Image rgb;
    Image hand_mask;
    DepthImage depth;
    SceneTruth truth;
};

struct SceneOptions {
    int width = 224;
    int height = 224;
    bool with_patient_hand = true;  // add a non-gesturing hand on the patient
    double p_okay = 0.5;            // chance the technician hand is in the okay mode
};

/// The fixed camera used for every synthetic scene (600 px focal length,
/// principal point at the image center, millimeter depth units, camera mounted
/// 2 m above the scanner origin looking straight down).
geom::CameraCalibration scene_calibration(int width = 224, int height = 224);

SceneSample render_scene(nn::Rng& rng, const SceneOptions& opt = {});

/// Truth objects in the form the detector's target encoder consumes.
std::vector<detect::GroundTruthObject> to_detection_truth(const SceneTruth& truth);

}  // namespace okpose::synth
