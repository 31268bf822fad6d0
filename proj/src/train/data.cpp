#include "okpose/train/data.hpp"

#include <cmath>
#include <stdexcept>

namespace okpose::train {

using geom::Point3;
using geom::Vec2;

CropCamera crop_camera(const geom::CameraCalibration& calib, const geom::CropTransform& tf) {
    return {calib.fx * tf.scale, calib.fy * tf.scale, tf.out_size / 2.0, tf.out_size / 2.0};
}

Point3 crop_translation_target(const geom::CameraCalibration& calib,
                               const geom::CropTransform& tf, const Vec2& wrist_image,
                               double wrist_depth_m) {
    if (wrist_depth_m <= 0.0) {
        throw std::invalid_argument("crop translation: wrist depth must be positive");
    }
    const CropCamera cc = crop_camera(calib, tf);
    const Vec2 q = tf.to_crop(wrist_image);
    return {wrist_depth_m * (q.x - cc.cx) / cc.fx, wrist_depth_m * (q.y - cc.cy) / cc.fy,
            wrist_depth_m};
}

void crop_point_to_image(const geom::CameraCalibration& calib, const geom::CropTransform& tf,
                         const Point3& p_crop, Vec2& image_uv, double& depth_m) {
    if (p_crop.z <= 0.0) {
        throw std::invalid_argument("crop point: depth must be positive");
    }
    const CropCamera cc = crop_camera(calib, tf);
    const Vec2 q{cc.fx * p_crop.x / p_crop.z + cc.cx, cc.fy * p_crop.y / p_crop.z + cc.cy};
    image_uv = tf.to_image(q);
    depth_m = p_crop.z;
}

CropSample make_crop_sample(const synth::SceneSample& sample, int hand_index,
                            const geom::CameraCalibration& calib,
                            const std::optional<augment::AugmentParams>& aug, nn::Rng* noise_rng,
                            int out_size, double margin) {
    const auto& hand = sample.truth.hands.at(static_cast<size_t>(hand_index));

    CropSample out;
    double angle = hand.roll;
    if (aug) angle = geom::normalize_angle(angle + aug->rotation_deg * M_PI / 180.0);
    out.tf = geom::CropTransform::from_box(hand.box, angle, out_size, margin);
    out.rgb = geom::rotated_crop(sample.rgb, hand.box, angle, out_size, margin);
    out.mask = geom::rotated_crop(sample.hand_mask, hand.box, angle, out_size, margin);
    out.lm_crop = geom::transform_landmarks(hand.landmarks2d, out.tf);
    out.okay = hand.okay;
    out.okay_param = hand.okay_param;

    // 3D labels are normalized by the crop angle so they always describe what
    // the crop shows, angle jitter included.
    const auto& wrist3 = hand.landmarks3d_cam[geom::kWristIndex];
    const double c = std::cos(angle), s = std::sin(angle);
    for (size_t i = 0; i < hand.landmarks3d_cam.size(); ++i) {
        const double rx = hand.landmarks3d_cam[i].x - wrist3.x;
        const double ry = hand.landmarks3d_cam[i].y - wrist3.y;
        const double rz = hand.landmarks3d_cam[i].z - wrist3.z;
        out.lm3d_norm[i] = {c * rx + s * ry, -s * rx + c * ry, rz};
    }
    const auto& wrist2 = hand.landmarks2d[geom::kWristIndex];
    out.translation = crop_translation_target(calib, out.tf, {wrist2.x, wrist2.y}, wrist3.z);

    if (aug) {
        if (aug->glove) {
            out.rgb = augment::glove_overlay(out.rgb, out.mask, aug->glove_color, 0.85f);
        }
        if (aug->sigma > 0.0 && noise_rng == nullptr) {
            throw std::invalid_argument("make_crop_sample: noise draw needs an rng");
        }
        nn::Rng fallback(0);
        out.rgb = augment::lowres_lowlight(out.rgb, aug->s, aug->b,
                                           noise_rng ? *noise_rng : fallback, aug->sigma);
    }
    return out;
}

nn::TensorPtr flatten_landmarks3d(const synth::HandLandmarks3D& lms) {
    std::vector<float> v;
    v.reserve(lms.size() * 3);
    for (const auto& p : lms) {
        v.push_back(static_cast<float>(p.x));
        v.push_back(static_cast<float>(p.y));
        v.push_back(static_cast<float>(p.z));
    }
    return nn::Tensor::from({1, static_cast<int>(v.size())}, v);
}

synth::HandLandmarks3D unflatten_landmarks3d(const nn::Tensor& t) {
    const int want = geom::kNumHandLandmarks * 3;
    if (static_cast<int>(t.numel()) != want) {
        throw std::invalid_argument("unflatten_landmarks3d: need " + std::to_string(want) +
                                    " values, got shape " + nn::shape_str(t.shape));
    }
    synth::HandLandmarks3D out{};
    for (int i = 0; i < geom::kNumHandLandmarks; ++i) {
        out[static_cast<size_t>(i)] = {t.data[3 * i], t.data[3 * i + 1], t.data[3 * i + 2]};
    }
    return out;
}

nn::TensorPtr translation_to_tensor(const geom::Point3& p) {
    return nn::Tensor::from({1, 3}, {static_cast<float>(p.x), static_cast<float>(p.y),
                                     static_cast<float>(p.z)});
}

geom::Point3 tensor_to_translation(const nn::Tensor& t) {
    if (t.numel() != 3) {
        throw std::invalid_argument("tensor_to_translation: need 3 values, got shape " +
                                    nn::shape_str(t.shape));
    }
    return {t.data[0], t.data[1], t.data[2]};
}

}  // namespace okpose::train
