#include "okpose/synth/hand_model.hpp"

#include <cmath>
#include <stdexcept>

namespace okpose::synth {

using geom::Point3;

namespace {

// Landmark layout: 0 wrist; 1-4 thumb; 5-8 index; 9-12 middle; 13-16 ring;
// 17-20 pinky (base joint first, fingertip last).
constexpr int kThumb = 1, kIndex = 5, kMiddle = 9, kRing = 13, kPinky = 17;

struct Chain {
    Point3 base;                    // first joint position
    double dir_x, dir_y;            // unit in-plane direction of the extended chain
    std::array<double, 3> len;      // segment lengths, meters
    std::array<double, 3> bend;     // cumulative out-of-plane bend per joint, radians
    std::array<double, 3> turn;     // cumulative in-plane turn per joint, radians
};

// Places joints 1..3 after the base. Bending tilts segments toward the camera
// (negative z); turning rotates the in-plane heading clockwise on screen.
void place_chain(const Chain& c, Point3* out) {
    out[0] = c.base;
    for (int j = 0; j < 3; ++j) {
        const double cb = std::cos(c.bend[static_cast<size_t>(j)]);
        const double sb = std::sin(c.bend[static_cast<size_t>(j)]);
        const double ct = std::cos(c.turn[static_cast<size_t>(j)]);
        const double st = std::sin(c.turn[static_cast<size_t>(j)]);
        const double dx = c.dir_x * ct - c.dir_y * st;
        const double dy = c.dir_x * st + c.dir_y * ct;
        const double l = c.len[static_cast<size_t>(j)];
        out[j + 1] = {out[j].x + l * dx * cb, out[j].y + l * dy * cb, out[j].z - l * sb};
    }
}

void normalize_dir(Chain& c) {
    const double n = std::hypot(c.dir_x, c.dir_y);
    c.dir_x /= n;
    c.dir_y /= n;
}

// The three non-pinching fingers share one parametric shape driven by curl.
Chain finger_chain(Point3 mcp, double dir_x, double dir_y, double l1, double l2, double l3,
                   double curl) {
    Chain c{mcp, dir_x, dir_y, {l1, l2, l3}, {}, {}};
    normalize_dir(c);
    const double b = curl * 1.0;  // full curl folds roughly 180 degrees over the chain
    c.bend = {0.8 * b, 1.9 * b, 2.7 * b};
    return c;
}

HandLandmarks3D pose_landmarks(double okay_blend, const std::array<double, 3>& curl) {
    HandLandmarks3D lm{};
    lm[geom::kWristIndex] = {0.0, 0.0, 0.0};

    // Middle, ring, pinky depend only on their curl value.
    Point3 tmp[4];
    place_chain(finger_chain({0.000, 0.055, 0.0}, 0.00, 1.0, 0.026, 0.017, 0.014, curl[0]), tmp);
    for (int j = 0; j < 4; ++j) lm[kMiddle + j] = tmp[j];
    place_chain(finger_chain({0.020, 0.052, 0.0}, 0.08, 1.0, 0.024, 0.015, 0.013, curl[1]), tmp);
    for (int j = 0; j < 4; ++j) lm[kRing + j] = tmp[j];
    place_chain(finger_chain({0.038, 0.046, 0.0}, 0.18, 1.0, 0.019, 0.012, 0.011, curl[2]), tmp);
    for (int j = 0; j < 4; ++j) lm[kPinky + j] = tmp[j];

    // Thumb and index have two authored poses (open and ring-closed) blended
    // linearly by okay_blend; the ring pose pins both fingertips together.
    Point3 thumb_open[4], index_open[4], thumb_ring[4], index_ring[4];
    {
        Chain t{{-0.028, 0.012, 0.0}, -0.75, 0.66, {0.024, 0.020, 0.016}, {}, {}};
        normalize_dir(t);
        t.turn = {0.0, -0.15, -0.25};
        place_chain(t, thumb_open);
        Chain i{{-0.022, 0.052, 0.0}, -0.10, 1.0, {0.024, 0.015, 0.013}, {}, {}};
        normalize_dir(i);
        place_chain(i, index_open);
    }
    {
        Chain t{{-0.028, 0.012, 0.0}, 0.30, 0.95, {0.024, 0.020, 0.016}, {}, {}};
        normalize_dir(t);
        t.bend = {0.15, 0.35, 0.45};
        t.turn = {0.0, 0.35, 0.55};
        place_chain(t, thumb_ring);
        Chain i{{-0.022, 0.052, 0.0}, -0.05, 1.0, {0.024, 0.015, 0.013}, {}, {}};
        normalize_dir(i);
        i.bend = {0.55, 1.25, 1.70};
        i.turn = {0.0, 0.25, 0.45};
        place_chain(i, index_ring);
        // Pin the ring closed: move both tips to their midpoint (2 mm apart)
        // and drag the distal joints along to keep the chains smooth.
        const Point3 mid{0.5 * (thumb_ring[3].x + index_ring[3].x),
                         0.5 * (thumb_ring[3].y + index_ring[3].y),
                         0.5 * (thumb_ring[3].z + index_ring[3].z)};
        auto pin = [&](Point3* chain, double side) {
            const Point3 target{mid.x + side * 0.001, mid.y, mid.z};
            const Point3 delta{target.x - chain[3].x, target.y - chain[3].y,
                               target.z - chain[3].z};
            chain[3] = target;
            chain[2] = {chain[2].x + 0.6 * delta.x, chain[2].y + 0.6 * delta.y,
                        chain[2].z + 0.6 * delta.z};
        };
        pin(thumb_ring, -1.0);
        pin(index_ring, +1.0);
    }
    for (int j = 0; j < 4; ++j) {
        const double o = okay_blend;
        lm[kThumb + j] = {(1 - o) * thumb_open[j].x + o * thumb_ring[j].x,
                          (1 - o) * thumb_open[j].y + o * thumb_ring[j].y,
                          (1 - o) * thumb_open[j].z + o * thumb_ring[j].z};
        lm[kIndex + j] = {(1 - o) * index_open[j].x + o * index_ring[j].x,
                          (1 - o) * index_open[j].y + o * index_ring[j].y,
                          (1 - o) * index_open[j].z + o * index_ring[j].z};
    }
    return lm;
}

}  // namespace

HandLandmarks3D hand_landmarks(const HandConfig& config) {
    if (config.okay_param < 0.0 || config.okay_param > 1.0) {
        throw std::invalid_argument("hand model: okay_param must lie in [0,1]");
    }
    if (config.scale <= 0.0) throw std::invalid_argument("hand model: scale must be positive");
    for (double c : config.finger_curl) {
        if (c < 0.0 || c > 1.0) {
            throw std::invalid_argument("hand model: finger_curl must lie in [0,1]");
        }
    }
    auto lm = pose_landmarks(config.okay_param, config.finger_curl);
    for (auto& p : lm) {
        p.x *= config.scale;
        p.y *= config.scale;
        p.z *= config.scale;
    }
    return lm;
}

const std::vector<Bone>& hand_bones() {
    static const std::vector<Bone> bones = {
        {0, 0, 0.0120},                                    // wrist pad
        {0, 5, 0.0085}, {0, 9, 0.0085},  {0, 13, 0.0080},  // palm
        {0, 17, 0.0075}, {5, 9, 0.0080}, {9, 13, 0.0080}, {13, 17, 0.0075},
        {0, 1, 0.0090}, {1, 2, 0.0070},  {2, 3, 0.0060},  {3, 4, 0.0055},   // thumb
        {5, 6, 0.0060}, {6, 7, 0.0055},  {7, 8, 0.0050},                    // index
        {9, 10, 0.0062}, {10, 11, 0.0056}, {11, 12, 0.0050},                // middle
        {13, 14, 0.0058}, {14, 15, 0.0053}, {15, 16, 0.0048},               // ring
        {17, 18, 0.0050}, {18, 19, 0.0046}, {19, 20, 0.0042},               // pinky
    };
    return bones;
}

}  // namespace okpose::synth
