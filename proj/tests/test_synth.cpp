#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "okpose/io/tensor_io.hpp"
#include "okpose/synth/dataset.hpp"
#include "okpose/synth/hand_model.hpp"
#include "okpose/synth/scene.hpp"

using namespace okpose;
using namespace okpose::synth;
using nn::Rng;

namespace {

double tip_distance(const HandLandmarks3D& lm) {
    const auto& a = lm[geom::kThumbTipIndex];
    const auto& b = lm[geom::kIndexTipIndex];
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("hand model: okay ring geometry and parameter validation") {
    for (const double scale : {0.93, 1.0, 1.07}) {
        HandConfig open_cfg;
        open_cfg.okay_param = 0.0;
        open_cfg.scale = scale;
        HandConfig ring_cfg = open_cfg;
        ring_cfg.okay_param = 1.0;
        HandConfig mid_cfg = open_cfg;
        mid_cfg.okay_param = 0.5;

        const double d_open = tip_distance(hand_landmarks(open_cfg));
        const double d_mid = tip_distance(hand_landmarks(mid_cfg));
        const double d_ring = tip_distance(hand_landmarks(ring_cfg));
        CHECK(d_open > kOkayOpenDist);
        CHECK(d_ring < kOkayClosedDist);
        CHECK(d_mid < d_open);
        CHECK(d_mid > d_ring);
    }

    // Curl on the three free fingers never touches the pinch distance.
    HandConfig curled;
    curled.okay_param = 1.0;
    curled.finger_curl = {0.9, 0.9, 0.9};
    CHECK(tip_distance(hand_landmarks(curled)) < kOkayClosedDist);

    // Uniform scaling acts linearly on every landmark.
    HandConfig unit;
    unit.okay_param = 0.3;
    HandConfig doubled = unit;
    doubled.scale = 2.0;
    const auto a = hand_landmarks(unit);
    const auto b = hand_landmarks(doubled);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(b[i].x == doctest::Approx(2.0 * a[i].x));
        CHECK(b[i].y == doctest::Approx(2.0 * a[i].y));
        CHECK(b[i].z == doctest::Approx(2.0 * a[i].z));
    }

    const auto& wrist = a[geom::kWristIndex];
    CHECK(wrist.x == 0.0);
    CHECK(wrist.y == 0.0);
    CHECK(wrist.z == 0.0);
    // Canonical pose points down-screen: its in-plane orientation is zero.
    geom::HandLandmarks2D flat{};
    for (size_t i = 0; i < a.size(); ++i) flat[i] = {a[i].x, a[i].y, 1.0};
    CHECK(geom::hand_orientation(flat) == doctest::Approx(0.0).epsilon(1e-12));

    HandConfig bad;
    bad.okay_param = 1.5;
    CHECK_THROWS_AS(hand_landmarks(bad), std::invalid_argument);
    bad.okay_param = 0.5;
    bad.scale = 0.0;
    CHECK_THROWS_AS(hand_landmarks(bad), std::invalid_argument);
    bad.scale = 1.0;
    bad.finger_curl = {2.0, 0.0, 0.0};
    CHECK_THROWS_AS(hand_landmarks(bad), std::invalid_argument);

    for (const auto& bone : hand_bones()) {
        CHECK(bone.a >= 0);
        CHECK(bone.b < geom::kNumHandLandmarks);
        CHECK(bone.radius > 0.0);
    }
}

TEST_CASE("scene rendering is deterministic in the seed") {
    Rng r1(70), r2(70), r3(71);
    const auto a = render_scene(r1);
    const auto b = render_scene(r2);
    const auto c = render_scene(r3);
    CHECK(a.rgb.data == b.rgb.data);
    CHECK(a.depth.units == b.depth.units);
    CHECK(a.hand_mask.data == b.hand_mask.data);
    REQUIRE(a.truth.hands.size() == b.truth.hands.size());
    for (size_t i = 0; i < a.truth.hands.size(); ++i) {
        CHECK(a.truth.hands[i].roll == b.truth.hands[i].roll);
        for (size_t j = 0; j < a.truth.hands[i].landmarks2d.size(); ++j) {
            CHECK(a.truth.hands[i].landmarks2d[j].x == b.truth.hands[i].landmarks2d[j].x);
            CHECK(a.truth.hands[i].landmarks2d[j].y == b.truth.hands[i].landmarks2d[j].y);
        }
    }
    CHECK(a.rgb.data != c.rgb.data);
}

TEST_CASE("scene ground truth is self-consistent") {
    Rng rng(71);
    std::vector<double> box_sides;
    int okay_scenes = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto scene_rng = rng.substream("scene/" + std::to_string(trial));
        const auto sample = render_scene(scene_rng);
        const auto& truth = sample.truth;

        REQUIRE(truth.bodies.size() == 2);
        CHECK(truth.bodies[0].bed_overlap > 0.65);   // patient lies on the bed
        CHECK(truth.bodies[1].bed_overlap < 0.01);   // technician stands clear
        CHECK_FALSE(truth.bodies[0].technician);
        CHECK(truth.bodies[1].technician);

        bool any_okay_tech = false;
        REQUIRE(truth.hands.size() == 2);
        for (const auto& hand : truth.hands) {
            for (const auto& lm : hand.landmarks2d) {
                CHECK(lm.x > hand.box.l);
                CHECK(lm.x < hand.box.r);
                CHECK(lm.y > hand.box.t);
                CHECK(lm.y < hand.box.b);
            }
            CHECK(hand.roll == geom::hand_orientation(hand.landmarks2d));
            CHECK(hand.okay == (hand.okay_param >= kOkayLabelThreshold));
            const auto& t4 = hand.landmarks2d[geom::kThumbTipIndex];
            const auto& t8 = hand.landmarks2d[geom::kIndexTipIndex];
            CHECK(hand.o_center.x == doctest::Approx(0.5 * (t4.x + t8.x)));
            CHECK(hand.o_center.y == doctest::Approx(0.5 * (t4.y + t8.y)));
            const bool tech = truth.bodies[static_cast<size_t>(hand.body_index)].technician;
            if (tech && hand.okay) any_okay_tech = true;

            // Roll-normalized 3D labels: wrist at origin, canonical heading.
            const auto& w3 = hand.landmarks3d_norm[geom::kWristIndex];
            CHECK(std::abs(w3.x) < 1e-12);
            CHECK(std::abs(w3.y) < 1e-12);
            CHECK(std::abs(w3.z) < 1e-12);
            const auto& mcp = hand.landmarks3d_norm[geom::kMiddleMcpIndex];
            CHECK(std::abs(mcp.x) < 1e-9);  // middle MCP sits straight below the wrist
            CHECK(mcp.y > 0.0);

            box_sides.push_back(std::max(hand.box.width(), hand.box.height()) / 1.24);
        }
        CHECK(truth.gesture_present == any_okay_tech);
        if (truth.gesture_present) {
            ++okay_scenes;
            const auto& gh = truth.hands[static_cast<size_t>(truth.gesture_hand)];
            CHECK(gh.okay);
            CHECK(truth.bodies[static_cast<size_t>(gh.body_index)].technician);
        }

        // Depth at the technician wrist matches the wrist's camera depth.
        const auto& hand = truth.hands[0];
        const auto& wrist2 = hand.landmarks2d[geom::kWristIndex];
        const double measured =
            depth_at(sample.depth, static_cast<int>(std::lround(wrist2.x)),
                     static_cast<int>(std::lround(wrist2.y))) * 0.001;
        CHECK(measured == doctest::Approx(hand.landmarks3d_cam[geom::kWristIndex].z).epsilon(0.01));
    }
    CHECK(okay_scenes > 60);
    CHECK(okay_scenes < 240);

    // Median ground-truth hand box side (without padding) lands in a band the
    // detector anchors are sized for.
    std::sort(box_sides.begin(), box_sides.end());
    const double median = box_sides[box_sides.size() / 2];
    CHECK(median > 30.0);
    CHECK(median < 50.0);
}

TEST_CASE("detection truth export") {
    Rng rng(72);
    const auto sample = render_scene(rng);
    const auto objs = to_detection_truth(sample.truth);
    REQUIRE(objs.size() == sample.truth.hands.size() + sample.truth.bodies.size());
    for (size_t i = 0; i < sample.truth.hands.size(); ++i) {
        const auto& hand = sample.truth.hands[i];
        CHECK(objs[i].cls == detect::ObjClass::hand);
        CHECK(objs[i].angle == hand.roll);
        const auto hc = hand.box.center();
        const auto bc =
            sample.truth.bodies[static_cast<size_t>(hand.body_index)].box.center();
        CHECK(objs[i].assoc.x == doctest::Approx(bc.x - hc.x));
        CHECK(objs[i].assoc.y == doctest::Approx(bc.y - hc.y));
    }
    for (size_t i = sample.truth.hands.size(); i < objs.size(); ++i) {
        CHECK(objs[i].cls == detect::ObjClass::body);
    }
}

TEST_CASE("tensor files round trip and reject corrupt input") {
    const auto dir = std::filesystem::temp_directory_path() / "okp_tensor_io";
    std::filesystem::create_directories(dir);
    const std::string p = (dir / "t.tens").string();

    io::save_tensor_f32(p, {2, 3}, {1.5f, -2.0f, 0.25f, 4.0f, 5.5f, -0.125f});
    auto t = io::load_tensor(p);
    CHECK(t.dtype == io::Dtype::f32);
    CHECK(t.dims == std::vector<uint32_t>{2, 3});
    CHECK(io::as_f32(t) == std::vector<float>{1.5f, -2.0f, 0.25f, 4.0f, 5.5f, -0.125f});

    io::save_tensor_u16(p, {4}, {0, 65535, 1600, 42});
    CHECK(io::as_u16(io::load_tensor(p)) == std::vector<uint16_t>{0, 65535, 1600, 42});

    CHECK_THROWS_AS(io::save_tensor_u8(p, {3}, {1, 2}), std::invalid_argument);

    // Corruption: flip a magic byte, then truncate.
    io::save_tensor_u8(p, {2, 2}, {9, 8, 7, 6});
    auto bytes = slurp(p);
    bytes[0] = 'X';
    std::ofstream(p, std::ios::binary | std::ios::trunc)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_WITH_AS(io::load_tensor(p), doctest::Contains("magic"), std::runtime_error);
    bytes[0] = 'O';
    std::ofstream(p, std::ios::binary | std::ios::trunc)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 2));
    CHECK_THROWS_WITH_AS(io::load_tensor(p), doctest::Contains("truncated"), std::runtime_error);

    // Images quantize to the u8 grid; depth maps are lossless.
    Image img(3, 2, 3);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i) / 20.0f;
    io::save_image_u8(p, img);
    const auto back = io::load_image_u8(p);
    REQUIRE(back.data.size() == img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-6);
    }
    DepthImage d(2, 2);
    d.units = {0, 1600, 1700, 65000};
    io::save_depth_u16(p, d);
    CHECK(io::load_depth_u16(p).units == d.units);
}

TEST_CASE("dataset generation: reproducible bytes, readable manifest and splits") {
    const auto base = std::filesystem::temp_directory_path() / "okp_dataset";
    std::filesystem::remove_all(base);
    const std::string d1 = (base / "a").string();
    const std::string d2 = (base / "b").string();
    DatasetCounts counts{3, 1, 1};
    make_dataset(d1, 99, counts);
    make_dataset(d2, 99, counts);

    for (const char* rel : {"train/img_00000.tens", "train/depth_00002.tens",
                            "train/mask_00001.tens", "train/labels.jsonl", "val/labels.jsonl",
                            "manifest.json", "calibration.txt"}) {
        CHECK(slurp(std::filesystem::path(d1) / rel) == slurp(std::filesystem::path(d2) / rel));
    }

    const auto info = read_manifest(d1);
    CHECK(info.seed == 99);
    CHECK(info.width == 224);
    CHECK(info.counts.at("train") == 3);
    CHECK(info.counts.at("test") == 1);

    const auto calib = load_dataset_calibration(d1);
    CHECK(calib.fx == 600.0);
    CHECK(calib.depth_scale == 0.001);

    const auto split = load_split(d1, "train");
    REQUIRE(split.size() == 3);
    // Loaded truth equals the truth of a freshly rendered scene from the same
    // per-sample substream.
    auto rng = nn::Rng(99).substream("train/2");
    const auto fresh = render_scene(rng);
    const auto& loaded = split[2].truth;
    REQUIRE(loaded.hands.size() == fresh.truth.hands.size());
    for (size_t i = 0; i < loaded.hands.size(); ++i) {
        CHECK(loaded.hands[i].roll == fresh.truth.hands[i].roll);
        for (size_t j = 0; j < loaded.hands[i].landmarks2d.size(); ++j) {
            CHECK(loaded.hands[i].landmarks2d[j].x == fresh.truth.hands[i].landmarks2d[j].x);
            CHECK(loaded.hands[i].landmarks3d_norm[j].z ==
                  fresh.truth.hands[i].landmarks3d_norm[j].z);
        }
    }
    const auto img = io::load_image_u8(split[2].image_path);
    CHECK(img.h == 224);
    CHECK(img.c == 3);

    CHECK_THROWS_AS(load_split(d1, "nope"), std::runtime_error);
    std::filesystem::remove_all(base);
}
