#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "okpose/image.hpp"

namespace okpose::geom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Axis-aligned box, image pixels, corner form with l < r and t < b.
struct BBox {
    double l = 0.0, t = 0.0, r = 0.0, b = 0.0;

    double width() const { return r - l; }
    double height() const { return b - t; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {(l + r) * 0.5, (t + b) * 0.5}; }
    double diagonal() const { return std::hypot(width(), height()); }
    bool valid() const {
        return l < r && t < b && std::isfinite(l) && std::isfinite(t) && std::isfinite(r) &&
               std::isfinite(b);
    }
};

/// Wraps an angle to (-pi, pi].
double normalize_angle(double a);

/// In-plane rotation by `a` radians, clockwise on screen (image y points down).
inline Vec2 rotate(const Vec2& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct Landmark2 {
    double x = 0.0;
    double y = 0.0;
    double conf = 0.0;
};

constexpr int kNumHandLandmarks = 21;
constexpr int kWristIndex = 0;
constexpr int kMiddleMcpIndex = 9;
constexpr int kThumbTipIndex = 4;
constexpr int kIndexTipIndex = 8;

using HandLandmarks2D = std::array<Landmark2, kNumHandLandmarks>;

/// Angle between the middle-MCP -> wrist vector and image-up (0,-1), positive
/// clockwise, zero for an upright hand. Requires both keypoints visible.
double hand_orientation(const HandLandmarks2D& lms);

/// Intersection-over-union of two boxes.
double iou(const BBox& a, const BBox& b);

/// Intersection of body and bed over the body area.
double iob(const BBox& body, const BBox& bed);

// ---- camera -------------------------------------------------------------

struct CameraCalibration {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    std::array<double, 9> rotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // camera -> scanner, row major
    std::array<double, 3> translation = {0, 0, 0};                 // meters
    double depth_scale = 1.0;                                      // meters per depth unit

    /// Throws when the rotation is not orthonormal with det +1 (tolerance
    /// 1e-9) or the focal lengths are not positive.
    void validate() const;
};

/// Back-projects a pixel with a depth reading into the scanner frame.
/// Throws on depth <= 0 or non-finite inputs.
Point3 pixel_depth_to_scanner(double u, double v, double depth, const CameraCalibration& calib);

/// Forward pinhole model: scanner-frame point to (u, v, depth units).
/// Throws when the point is not in front of the camera.
void scanner_to_pixel_depth(const Point3& p, const CameraCalibration& calib, double& u,
                            double& v, double& depth);

CameraCalibration load_calibration(const std::string& path);
void save_calibration(const std::string& path, const CameraCalibration& calib);

// ---- rotated crops ------------------------------------------------------

/// Similarity transform between image coordinates and the axis-aligned crop
/// frame: the crop is centered on the box, rotated so a hand at `angle`
/// becomes upright, and scaled so max(box side) * (1 + margin) spans out_size.
struct CropTransform {
    Vec2 center;
    double angle = 0.0;
    double scale = 1.0;  // crop pixels per image pixel
    int out_size = 0;

    static CropTransform from_box(const BBox& box, double angle, int out_size, double margin);

    Vec2 to_crop(const Vec2& p) const;
    Vec2 to_image(const Vec2& q) const;
    double source_side() const { return out_size / scale; }
};

/// Bilinear rotated crop; out-of-bounds source pixels read as 0.
/// Throws when the box does not intersect the image.
Image rotated_crop(const Image& img, const BBox& box, double angle, int out_size, double margin);

/// Applies the crop transform to landmark coordinates (confidences carried over).
HandLandmarks2D transform_landmarks(const HandLandmarks2D& lms, const CropTransform& tf);

}  // namespace okpose::geom
