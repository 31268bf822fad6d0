#pragma once

#include <optional>

#include "okpose/augment/augment.hpp"
#include "okpose/geom/geom.hpp"
#include "okpose/image.hpp"
#include "okpose/synth/scene.hpp"

namespace okpose::train {

/// Default crop geometry shared by the landmark and pose stages.
constexpr int kCropSize = 64;
constexpr double kCropMargin = 0.25;

/// One training example for the crop-level stages, cut from a scene.
struct CropSample {
    Image rgb;                       // [3,64,64] oriented crop
    Image mask;                      // [1,64,64] hand coverage in the same crop
    geom::HandLandmarks2D lm_crop{};  // landmarks in crop coordinates
    synth::HandLandmarks3D lm3d_norm{};  // wrist-relative, roll-normalized, meters
    geom::Point3 translation{};      // wrist position in the crop-camera frame, meters
    bool okay = false;
    double okay_param = 0.0;
    geom::CropTransform tf;
};

/// Intrinsics of the virtual camera attached to an oriented crop: focal
/// lengths are scaled by the crop zoom and the principal point sits at the
/// crop center.
struct CropCamera {
    double fx, fy, cx, cy;
};
CropCamera crop_camera(const geom::CameraCalibration& calib, const geom::CropTransform& tf);

/// Wrist position expressed in the crop-camera frame (meters). Defined so that
/// projecting it with crop_camera() lands on the wrist's crop coordinates at
/// the wrist's true camera depth.
geom::Point3 crop_translation_target(const geom::CameraCalibration& calib,
                                     const geom::CropTransform& tf, const geom::Vec2& wrist_image,
                                     double wrist_depth_m);

/// Inverse of the localization chain: a point in the crop-camera frame back to
/// full-image pixel coordinates plus camera depth.
void crop_point_to_image(const geom::CameraCalibration& calib, const geom::CropTransform& tf,
                         const geom::Point3& p_crop, geom::Vec2& image_uv, double& depth_m);

/// Cuts the oriented crop for `hand` from a rendered scene and assembles every
/// label the crop stages train on. When `aug` is set, the photometric chain
/// (resolution/brightness/noise, optional glove recolor) runs on the crop and
/// the crop is taken at the jittered angle.
CropSample make_crop_sample(const synth::SceneSample& sample, int hand_index,
                            const geom::CameraCalibration& calib,
                            const std::optional<augment::AugmentParams>& aug = std::nullopt,
                            nn::Rng* noise_rng = nullptr, int out_size = kCropSize,
                            double margin = kCropMargin);

/// Row-major (x, y, z) flattening of the 21 normalized 3D landmarks -> [1,63],
/// the regression target of the 3D head. `unflatten` inverts it and accepts
/// [1,63] or [63].
nn::TensorPtr flatten_landmarks3d(const synth::HandLandmarks3D& lms);
synth::HandLandmarks3D unflatten_landmarks3d(const nn::Tensor& t);

/// Wrist translation as a [1,3] target and back.
nn::TensorPtr translation_to_tensor(const geom::Point3& p);
geom::Point3 tensor_to_translation(const nn::Tensor& t);

}  // namespace okpose::train
