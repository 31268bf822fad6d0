#include "okpose/geom/geom.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace okpose::geom {

double normalize_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a > M_PI) a -= two_pi;
    if (a <= -M_PI) a += two_pi;
    return a;
}

double hand_orientation(const HandLandmarks2D& lms) {
    const auto& wrist = lms[kWristIndex];
    const auto& mcp = lms[kMiddleMcpIndex];
    if (wrist.conf <= 0.0 || mcp.conf <= 0.0) {
        throw std::invalid_argument("hand_orientation: wrist or middle-MCP not visible");
    }
    const double vx = wrist.x - mcp.x;
    const double vy = wrist.y - mcp.y;
    if (vx == 0.0 && vy == 0.0) {
        throw std::invalid_argument("hand_orientation: wrist and middle-MCP coincide");
    }
    // Upright hand has v = (0, -|v|); clockwise-on-screen rotation is positive.
    return std::atan2(vx, -vy);
}

double iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.r, b.r) - std::max(a.l, b.l);
    const double ih = std::min(a.b, b.b) - std::max(a.t, b.t);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

double iob(const BBox& body, const BBox& bed) {
    const double iw = std::min(body.r, bed.r) - std::max(body.l, bed.l);
    const double ih = std::min(body.b, bed.b) - std::max(body.t, bed.t);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih / body.area();
}

void CameraCalibration::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw std::invalid_argument("calibration: focal lengths must be positive");
    }
    const auto& r = rotation;
    // R^T R = I within 1e-9.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
            const double expect = (i == j) ? 1.0 : 0.0;
            if (std::abs(dot - expect) > 1e-9) {
                throw std::invalid_argument("calibration: rotation is not orthonormal");
            }
        }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(det - 1.0) > 1e-9) {
        throw std::invalid_argument("calibration: rotation determinant is not +1");
    }
    for (const double v : {fx, fy, cx, cy, depth_scale}) {
        if (!std::isfinite(v)) throw std::invalid_argument("calibration: non-finite field");
    }
    if (!(depth_scale > 0.0)) {
        throw std::invalid_argument("calibration: depth_scale must be positive");
    }
}

Point3 pixel_depth_to_scanner(double u, double v, double depth, const CameraCalibration& c) {
    if (!std::isfinite(depth) || depth <= 0.0) {
        throw std::invalid_argument("pixel_depth_to_scanner: invalid depth reading");
    }
    if (!std::isfinite(u) || !std::isfinite(v)) {
        throw std::invalid_argument("pixel_depth_to_scanner: non-finite pixel");
    }
    const double z = depth * c.depth_scale;
    const double xc = z * (u - c.cx) / c.fx;
    const double yc = z * (v - c.cy) / c.fy;
    const auto& r = c.rotation;
    return {r[0] * xc + r[1] * yc + r[2] * z + c.translation[0],
            r[3] * xc + r[4] * yc + r[5] * z + c.translation[1],
            r[6] * xc + r[7] * yc + r[8] * z + c.translation[2]};
}

void scanner_to_pixel_depth(const Point3& p, const CameraCalibration& c, double& u, double& v,
                            double& depth) {
    const double dx = p.x - c.translation[0];
    const double dy = p.y - c.translation[1];
    const double dz = p.z - c.translation[2];
    const auto& r = c.rotation;
    // camera point = R^T (p - t)
    const double xc = r[0] * dx + r[3] * dy + r[6] * dz;
    const double yc = r[1] * dx + r[4] * dy + r[7] * dz;
    const double zc = r[2] * dx + r[5] * dy + r[8] * dz;
    if (zc <= 0.0) {
        throw std::invalid_argument("scanner_to_pixel_depth: point behind the camera");
    }
    u = c.fx * xc / zc + c.cx;
    v = c.fy * yc / zc + c.cy;
    depth = zc / c.depth_scale;
}

namespace {

std::vector<double> parse_numbers(const std::string& s, size_t expect, const std::string& key) {
    std::istringstream iss(s);
    std::vector<double> vals;
    double v;
    while (iss >> v) vals.push_back(v);
    if (vals.size() != expect) {
        throw std::runtime_error("calibration: field '" + key + "' expects " +
                                 std::to_string(expect) + " numbers, got " +
                                 std::to_string(vals.size()));
    }
    return vals;
}

}  // namespace

CameraCalibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("calibration: cannot open '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                throw std::runtime_error("calibration: malformed line " + std::to_string(lineno) +
                                         " in '" + path + "'");
            }
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    for (const char* key : {"intrinsics.fx", "intrinsics.fy", "intrinsics.cx", "intrinsics.cy",
                            "extrinsics.rotation", "extrinsics.translation", "depth_scale"}) {
        if (!kv.count(key)) {
            throw std::runtime_error("calibration: missing field '" + std::string(key) + "'");
        }
    }
    CameraCalibration c;
    c.fx = parse_numbers(kv["intrinsics.fx"], 1, "intrinsics.fx")[0];
    c.fy = parse_numbers(kv["intrinsics.fy"], 1, "intrinsics.fy")[0];
    c.cx = parse_numbers(kv["intrinsics.cx"], 1, "intrinsics.cx")[0];
    c.cy = parse_numbers(kv["intrinsics.cy"], 1, "intrinsics.cy")[0];
    const auto rot = parse_numbers(kv["extrinsics.rotation"], 9, "extrinsics.rotation");
    std::copy(rot.begin(), rot.end(), c.rotation.begin());
    const auto tr = parse_numbers(kv["extrinsics.translation"], 3, "extrinsics.translation");
    std::copy(tr.begin(), tr.end(), c.translation.begin());
    c.depth_scale = parse_numbers(kv["depth_scale"], 1, "depth_scale")[0];
    c.validate();
    return c;
}

void save_calibration(const std::string& path, const CameraCalibration& c) {
    c.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("calibration: cannot write '" + path + "'");
    out.precision(17);
    out << "# camera calibration\n";
    out << "intrinsics.fx = " << c.fx << "\n";
    out << "intrinsics.fy = " << c.fy << "\n";
    out << "intrinsics.cx = " << c.cx << "\n";
    out << "intrinsics.cy = " << c.cy << "\n";
    out << "extrinsics.rotation =";
    for (const double v : c.rotation) out << " " << v;
    out << "\n";
    out << "extrinsics.translation =";
    for (const double v : c.translation) out << " " << v;
    out << "\n";
    out << "depth_scale = " << c.depth_scale << "\n";
    if (!out) throw std::runtime_error("calibration: write failed for '" + path + "'");
}

CropTransform CropTransform::from_box(const BBox& box, double angle, int out_size,
                                      double margin) {
    if (!box.valid()) throw std::invalid_argument("crop: invalid box");
    if (out_size < 1) throw std::invalid_argument("crop: out_size must be positive");
    CropTransform tf;
    tf.center = box.center();
    tf.angle = angle;
    const double side = std::max(box.width(), box.height()) * (1.0 + margin);
    tf.scale = out_size / side;
    tf.out_size = out_size;
    return tf;
}

Vec2 CropTransform::to_crop(const Vec2& p) const {
    const Vec2 d = rotate({p.x - center.x, p.y - center.y}, -angle);
    return {d.x * scale + out_size * 0.5, d.y * scale + out_size * 0.5};
}

Vec2 CropTransform::to_image(const Vec2& q) const {
    const Vec2 d = rotate({(q.x - out_size * 0.5) / scale, (q.y - out_size * 0.5) / scale}, angle);
    return {d.x + center.x, d.y + center.y};
}

Image rotated_crop(const Image& img, const BBox& box, double angle, int out_size, double margin) {
    if (!box.valid()) throw std::invalid_argument("rotated_crop: invalid box");
    const BBox frame{0.0, 0.0, static_cast<double>(img.w), static_cast<double>(img.h)};
    if (iou(box, frame) == 0.0 && iob(box, frame) == 0.0) {
        throw std::invalid_argument("rotated_crop: box does not intersect the image");
    }
    const CropTransform tf = CropTransform::from_box(box, angle, out_size, margin);
    Image out(out_size, out_size, img.c);
    for (int y = 0; y < out_size; ++y) {
        for (int x = 0; x < out_size; ++x) {
            const Vec2 p = tf.to_image({static_cast<double>(x), static_cast<double>(y)});
            for (int ch = 0; ch < img.c; ++ch) {
                out.at(ch, y, x) = img.sample(ch, p.x, p.y);
            }
        }
    }
    return out;
}

HandLandmarks2D transform_landmarks(const HandLandmarks2D& lms, const CropTransform& tf) {
    HandLandmarks2D out;
    for (int i = 0; i < kNumHandLandmarks; ++i) {
        const Vec2 q = tf.to_crop({lms[i].x, lms[i].y});
        out[i] = {q.x, q.y, lms[i].conf};
    }
    return out;
}

}  // namespace okpose::geom
