#include "okpose/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace okpose::synth {

using geom::BBox;
using geom::Point3;
using geom::Vec2;

namespace {

constexpr double kDepthScale = 0.001;  // meters per depth unit
constexpr double kWallZ = 2.25;

struct Color {
    float r, g, b;
};

// Deterministic per-pixel texture hash, independent of the sample RNG stream.
float hash01(int x, int y, uint32_t salt) {
    uint32_t h = static_cast<uint32_t>(x) * 73856093u ^ static_cast<uint32_t>(y) * 19349663u ^
                 salt * 2654435761u;
    h ^= h >> 15;
    h *= 2246822519u;
    h ^= h >> 13;
    return static_cast<float>(h & 0xffffffu) / static_cast<float>(0x1000000u);
}

struct Canvas {
    Image* rgb;
    Image* mask;
    std::vector<double> z;  // meters, per pixel
    int w, h;

    void put_color(int x, int y, Color c, float cov) {
        for (int ch = 0; ch < 3; ++ch) {
            const float base = rgb->at(ch, y, x);
            const float v = ch == 0 ? c.r : (ch == 1 ? c.g : c.b);
            rgb->at(ch, y, x) = base + (v - base) * cov;
        }
    }
};

void fill_background(Canvas& cv, Color base, float lum) {
    for (int y = 0; y < cv.h; ++y) {
        for (int x = 0; x < cv.w; ++x) {
            const float n = 0.92f + 0.16f * hash01(x, y, 11);
            cv.put_color(x, y, {base.r * n * lum, base.g * n * lum, base.b * n * lum}, 1.0f);
            cv.z[static_cast<size_t>(y) * cv.w + x] = kWallZ;
        }
    }
}

void fill_rect(Canvas& cv, const BBox& box, double z_m, Color base, float lum, uint32_t salt) {
    const int x0 = std::max(0, static_cast<int>(std::ceil(box.l)));
    const int x1 = std::min(cv.w - 1, static_cast<int>(std::floor(box.r)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(box.t)));
    const int y1 = std::min(cv.h - 1, static_cast<int>(std::floor(box.b)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            auto& zb = cv.z[static_cast<size_t>(y) * cv.w + x];
            if (z_m >= zb) continue;
            const float n = 0.90f + 0.20f * hash01(x, y, salt);
            cv.put_color(x, y, {base.r * n * lum, base.g * n * lum, base.b * n * lum}, 1.0f);
            zb = z_m;
        }
    }
}

// One skeleton capsule, anti-aliased, depth taken from the 3D centerline.
void draw_capsule(Canvas& cv, const geom::CameraCalibration& cam, const Point3& pa,
                  const Point3& pb, double radius_m, Color color, float lum) {
    const double ua = cam.fx * pa.x / pa.z + cam.cx, va = cam.fy * pa.y / pa.z + cam.cy;
    const double ub = cam.fx * pb.x / pb.z + cam.cx, vb = cam.fy * pb.y / pb.z + cam.cy;
    const double r_px_max = cam.fx * radius_m / std::min(pa.z, pb.z);
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ua, ub) - r_px_max - 1)));
    const int x1 = std::min(cv.w - 1, static_cast<int>(std::ceil(std::max(ua, ub) + r_px_max + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(va, vb) - r_px_max - 1)));
    const int y1 = std::min(cv.h - 1, static_cast<int>(std::ceil(std::max(va, vb) + r_px_max + 1)));
    const double dx = ub - ua, dy = vb - va;
    const double len2 = dx * dx + dy * dy;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double t = 0.0;
            if (len2 > 0.0) {
                t = std::clamp(((x - ua) * dx + (y - va) * dy) / len2, 0.0, 1.0);
            }
            const double cu = ua + t * dx, cvv = va + t * dy;
            const double d = std::hypot(x - cu, y - cvv);
            const double zc = pa.z + t * (pb.z - pa.z);
            const double r_px = cam.fx * radius_m / zc;
            const float cov = static_cast<float>(std::clamp(r_px + 0.5 - d, 0.0, 1.0));
            if (cov <= 0.0f) continue;
            auto& zb = cv.z[static_cast<size_t>(y) * cv.w + x];
            if (zc >= zb) continue;
            // Cheap depth shading so the hand is not a flat blob.
            const float shade = std::clamp(1.1f - 6.0f * static_cast<float>(zc - pa.z), 0.8f, 1.1f);
            cv.put_color(x, y, {color.r * shade * lum, color.g * shade * lum, color.b * shade * lum},
                         cov);
            cv.mask->at(0, y, x) = std::max(cv.mask->at(0, y, x), cov);
            if (cov >= 0.5f) zb = zc;
        }
    }
}

struct PlacedHand {
    HandLandmarks3D cam_points;  // camera frame
    double roll;
    double okay_param;
    int body_index;
};

// Positions one posed hand in the camera frame: roll about the viewing axis,
// then translate so the wrist projects to (u,v) at depth z.
PlacedHand place_hand(const HandLandmarks3D& canonical, const geom::CameraCalibration& cam,
                      double u, double v, double z, double roll, double okay_param,
                      int body_index) {
    PlacedHand ph;
    ph.roll = roll;
    ph.okay_param = okay_param;
    ph.body_index = body_index;
    const double c = std::cos(roll), s = std::sin(roll);
    const Point3 wrist{z * (u - cam.cx) / cam.fx, z * (v - cam.cy) / cam.fy, z};
    for (size_t i = 0; i < canonical.size(); ++i) {
        const auto& p = canonical[i];
        // In-plane (clockwise on screen) rotation, depth offset added to z.
        ph.cam_points[i] = {wrist.x + c * p.x - s * p.y, wrist.y + s * p.x + c * p.y,
                            wrist.z + p.z};
    }
    return ph;
}

HandTruth hand_truth_from(const PlacedHand& ph, const geom::CameraCalibration& cam) {
    HandTruth t;
    t.okay_param = ph.okay_param;
    t.okay = ph.okay_param >= kOkayLabelThreshold;
    t.body_index = ph.body_index;
    t.landmarks3d_cam = ph.cam_points;
    double min_u = 1e18, max_u = -1e18, min_v = 1e18, max_v = -1e18;
    for (size_t i = 0; i < ph.cam_points.size(); ++i) {
        const auto& p = ph.cam_points[i];
        const double u = cam.fx * p.x / p.z + cam.cx;
        const double v = cam.fy * p.y / p.z + cam.cy;
        t.landmarks2d[i] = {u, v, 1.0};
        min_u = std::min(min_u, u);
        max_u = std::max(max_u, u);
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
    }
    const double pad = 0.12 * std::max(max_u - min_u, max_v - min_v);
    t.box = {min_u - pad, min_v - pad, max_u + pad, max_v + pad};
    t.roll = geom::hand_orientation(t.landmarks2d);
    const auto& wrist = ph.cam_points[geom::kWristIndex];
    const double cr = std::cos(t.roll), sr = std::sin(t.roll);
    for (size_t i = 0; i < ph.cam_points.size(); ++i) {
        const double rx = ph.cam_points[i].x - wrist.x;
        const double ry = ph.cam_points[i].y - wrist.y;
        const double rz = ph.cam_points[i].z - wrist.z;
        // Undo the roll: rotate by -roll in the image plane.
        t.landmarks3d_norm[i] = {cr * rx + sr * ry, -sr * rx + cr * ry, rz};
    }
    const auto& tip_a = t.landmarks2d[geom::kThumbTipIndex];
    const auto& tip_b = t.landmarks2d[geom::kIndexTipIndex];
    t.o_center = {0.5 * (tip_a.x + tip_b.x), 0.5 * (tip_a.y + tip_b.y)};
    t.o_depth_m = 0.5 * (ph.cam_points[geom::kThumbTipIndex].z +
                         ph.cam_points[geom::kIndexTipIndex].z);
    return t;
}

}  // namespace

geom::CameraCalibration scene_calibration(int width, int height) {
    geom::CameraCalibration cam;
    cam.fx = 600.0;
    cam.fy = 600.0;
    cam.cx = (width - 1) / 2.0;
    cam.cy = (height - 1) / 2.0;
    // Camera looks straight down from 2 m above the scanner origin: camera x
    // stays scanner x, camera y maps to scanner -y, camera z to scanner -z.
    cam.rotation = {1, 0, 0, 0, -1, 0, 0, 0, -1};
    cam.translation = {0.0, 0.0, 2.0};
    cam.depth_scale = kDepthScale;
    return cam;
}

SceneSample render_scene(nn::Rng& rng, const SceneOptions& opt) {
    const int w = opt.width, h = opt.height;
    if (w < 96 || h < 96) throw std::invalid_argument("render_scene: image must be >= 96x96");
    const auto cam = scene_calibration(w, h);
    const double sx = w / 224.0, sy = h / 224.0;  // layout is authored for 224x224

    SceneSample out{Image(h, w, 3), Image(h, w, 1), DepthImage(h, w), {}};
    Canvas cv{&out.rgb, &out.hand_mask, std::vector<double>(static_cast<size_t>(w) * h, kWallZ),
              w, h};

    // Fixed draw order keeps samples reproducible for a given seed.
    const float lum = rng.uniform(0.88f, 1.10f);
    fill_background(cv, {0.30f, 0.29f, 0.28f}, lum);

    BBox bed{(66 + rng.uniform(-6.0f, 6.0f)) * sx, (20 + rng.uniform(-6.0f, 6.0f)) * sy,
             (210 + rng.uniform(-6.0f, 6.0f)) * sx, (206 + rng.uniform(-6.0f, 6.0f)) * sy};
    fill_rect(cv, bed, 1.95, {0.55f, 0.62f, 0.72f}, lum, 23);
    out.truth.bed = bed;

    // Patient body: mostly on the bed.
    const double pb_l = bed.l + rng.uniform(10.0f, 28.0f) * sx;
    const double pb_t = bed.t + rng.uniform(8.0f, 22.0f) * sy;
    BBox patient{pb_l, pb_t, pb_l + rng.uniform(72.0f, 100.0f) * sx,
                 pb_t + rng.uniform(130.0f, 165.0f) * sy};
    patient.r = std::min(patient.r, static_cast<double>(w - 2));
    patient.b = std::min(patient.b, static_cast<double>(h - 2));
    fill_rect(cv, patient, 1.80, {0.45f, 0.62f, 0.55f}, lum, 37);
    out.truth.bodies.push_back({patient, false, geom::iob(patient, bed)});

    // Technician body: hugging the left edge, clear of the bed.
    const double tb_t = rng.uniform(50.0f, 80.0f) * sy;
    BBox tech{2.0 * sx, tb_t, (2 + rng.uniform(40.0f, 54.0f)) * sx,
              tb_t + rng.uniform(115.0f, 140.0f) * sy};
    tech.r = std::min(tech.r, bed.l - 4.0);
    fill_rect(cv, tech, 1.78, {0.20f, 0.24f, 0.38f}, lum, 51);
    out.truth.bodies.push_back({tech, true, geom::iob(tech, bed)});

    std::vector<PlacedHand> hands;

    // Technician hand: the one that may show the okay gesture.
    {
        const bool okay_mode = rng.bernoulli(opt.p_okay);
        const double okay_param =
            okay_mode ? rng.uniform(0.85f, 1.0f) : rng.uniform(0.0f, 0.6f);
        HandConfig cfg;
        cfg.okay_param = okay_param;
        cfg.scale = rng.uniform(0.93f, 1.07f);
        cfg.finger_curl = {rng.uniform(0.0f, 0.35f), rng.uniform(0.0f, 0.35f),
                           rng.uniform(0.0f, 0.35f)};
        const double u = std::clamp((tech.r + rng.uniform(5.0f, 45.0f) * sx),
                                    52.0 * sx, (224.0 - 52.0) * sx);
        const double v = std::clamp(tech.t + rng.uniform(0.0f, 70.0f) * sy, 52.0 * sy,
                                    (224.0 - 52.0) * sy);
        const double z = rng.uniform(1.50f, 1.66f);
        const double roll = rng.uniform(-3.1f, 3.1f);
        hands.push_back(place_hand(hand_landmarks(cfg), cam, u, v, z, roll, okay_param, 1));
    }
    // Patient hand: never in the okay mode.
    if (opt.with_patient_hand) {
        HandConfig cfg;
        cfg.okay_param = rng.uniform(0.0f, 0.6f);
        cfg.scale = rng.uniform(0.93f, 1.07f);
        cfg.finger_curl = {rng.uniform(0.1f, 0.5f), rng.uniform(0.1f, 0.5f),
                           rng.uniform(0.1f, 0.5f)};
        const auto pc = patient.center();
        const double u = std::clamp(pc.x + rng.uniform(-28.0f, 28.0f) * sx, 52.0 * sx,
                                    (224.0 - 52.0) * sx);
        const double v = std::clamp(pc.y + rng.uniform(-45.0f, 45.0f) * sy, 52.0 * sy,
                                    (224.0 - 52.0) * sy);
        const double z = 1.72;
        const double roll = rng.uniform(-3.1f, 3.1f);
        hands.push_back(place_hand(hand_landmarks(cfg), cam, u, v, z, roll, cfg.okay_param, 0));
    }

    const Color skin{0.86f, 0.66f, 0.52f};
    for (const auto& ph : hands) {
        for (const auto& bone : hand_bones()) {
            draw_capsule(cv, cam, ph.cam_points[static_cast<size_t>(bone.a)],
                         ph.cam_points[static_cast<size_t>(bone.b)], bone.radius, skin, lum);
        }
        out.truth.hands.push_back(hand_truth_from(ph, cam));
    }

    // Depth map: quantize to millimeters; drop a deterministic 2% of pixels to
    // exercise the invalid-depth fallback downstream.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double z = cv.z[static_cast<size_t>(y) * w + x];
            uint16_t units = static_cast<uint16_t>(std::lround(z / kDepthScale));
            if (hash01(x, y, 77) < 0.02f) units = 0;
            out.depth.units[static_cast<size_t>(y) * w + x] = units;
        }
    }
    for (auto& v : out.rgb.data) v = std::clamp(v, 0.0f, 1.0f);

    // Scene-level gesture label: best okay technician hand.
    double best = -1.0;
    for (size_t i = 0; i < out.truth.hands.size(); ++i) {
        const auto& hand = out.truth.hands[i];
        if (!out.truth.bodies[static_cast<size_t>(hand.body_index)].technician) continue;
        if (hand.okay && hand.okay_param > best) {
            best = hand.okay_param;
            out.truth.gesture_hand = static_cast<int>(i);
        }
    }
    out.truth.gesture_present = out.truth.gesture_hand >= 0;
    return out;
}

std::vector<detect::GroundTruthObject> to_detection_truth(const SceneTruth& truth) {
    std::vector<detect::GroundTruthObject> out;
    for (const auto& hand : truth.hands) {
        detect::GroundTruthObject o;
        o.box = hand.box;
        o.cls = detect::ObjClass::hand;
        o.angle = hand.roll;
        const auto hc = hand.box.center();
        const auto bc = truth.bodies[static_cast<size_t>(hand.body_index)].box.center();
        o.assoc = {bc.x - hc.x, bc.y - hc.y};
        out.push_back(o);
    }
    for (const auto& body : truth.bodies) {
        detect::GroundTruthObject o;
        o.box = body.box;
        o.cls = detect::ObjClass::body;
        out.push_back(o);
    }
    return out;
}

}  // namespace okpose::synth
