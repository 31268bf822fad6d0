#include <doctest.h>

#include <cmath>
#include <map>

#include "okpose/augment/augment.hpp"
#include "support/lowres_reference.hpp"

using namespace okpose;
using namespace okpose::augment;
using okpose::nn::Rng;

namespace {

Image random_image(int h, int w, int c, Rng& rng) {
    Image img(h, w, c);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
    return img;
}

}  // namespace

TEST_CASE("lowres_lowlight: trivial behaviors") {
    Rng rng(1);
    SUBCASE("s=1, b=1, sigma=0 is the identity") {
        auto img = random_image(9, 7, 3, rng);
        Rng noise = rng.substream("noise");
        const Image out = lowres_lowlight(img, 1, 1.0, noise, 0.0);
        for (size_t i = 0; i < img.data.size(); ++i) {
            CHECK(std::abs(out.data[i] - img.data[i]) < 1e-7f);
        }
    }
    SUBCASE("brightening a constant 0.9 by 1.2 clamps to exactly 1") {
        for (const int s : {1, 2, 4, 8}) {
            Image img(16, 16, 1, 0.9f);
            Rng noise = rng.substream("noise");
            const Image out = lowres_lowlight(img, s, 1.2, noise, 0.0);
            for (const float v : out.data) CHECK(v == 1.0f);
        }
    }
    SUBCASE("output range is always [0,1]") {
        auto img = random_image(17, 23, 3, rng);
        for (const int s : {1, 2, 4, 8}) {
            Rng noise = rng.substream("noise2");
            const Image out = lowres_lowlight(img, s, 1.24, noise, 0.2);
            for (const float v : out.data) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
    }
    SUBCASE("s-aligned piecewise-constant image survives the round trip exactly") {
        const int s = 4;
        Image img(16, 16, 1);
        Rng vals(3);
        for (int by = 0; by < 4; ++by) {
            for (int bx = 0; bx < 4; ++bx) {
                const float v = static_cast<float>(vals.uniform(0.0, 1.0));
                for (int y = by * s; y < (by + 1) * s; ++y)
                    for (int x = bx * s; x < (bx + 1) * s; ++x) img.at(0, y, x) = v;
            }
        }
        Rng noise(4);
        const Image out = lowres_lowlight(img, s, 1.0, noise, 0.0);
        for (size_t i = 0; i < img.data.size(); ++i) {
            CHECK(std::abs(out.data[i] - img.data[i]) <= 1e-6f);
        }
    }
    SUBCASE("too-small image throws") {
        Image img(4, 4, 1);
        Rng noise(5);
        CHECK_THROWS_AS(lowres_lowlight(img, 8, 1.0, noise, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(lowres_lowlight(img, 3, 1.0, noise, 0.0), std::invalid_argument);
    }
}

TEST_CASE("lowres_lowlight: pixel-exact match with the scalar reference") {
    Rng data_rng(20240818);
    for (const int s : {1, 2, 4, 8}) {
        for (const int size : {8, 16, 21}) {  // 21 exercises partial edge blocks
            if (size < s) continue;
            auto img = random_image(size, size, 3, data_rng);
            const double b = data_rng.uniform(0.75, 1.25);
            const double sigma = 0.02;
            Rng noise_a(555, "noise");
            Rng noise_b(555, "noise");
            const Image got = lowres_lowlight(img, s, b, noise_a, sigma);
            const Image want = test::lowres_lowlight_reference(img, s, b, noise_b, sigma);
            REQUIRE(got.data.size() == want.data.size());
            for (size_t i = 0; i < got.data.size(); ++i) {
                REQUIRE(got.data[i] == want.data[i]);  // bitwise
            }
        }
    }
    SUBCASE("8x8 ramp, s=2, b=0.8, seeded noise — frozen comparison") {
        Image img(8, 8, 1);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) img.at(0, y, x) = (y * 8 + x) / 63.0f;
        Rng a(777, "noise"), b(777, "noise");
        const Image got = lowres_lowlight(img, 2, 0.8, a, 0.02);
        const Image want = test::lowres_lowlight_reference(img, 2, 0.8, b, 0.02);
        for (size_t i = 0; i < got.data.size(); ++i) REQUIRE(got.data[i] == want.data[i]);
    }
}

TEST_CASE("glove_overlay") {
    Rng rng(9);
    auto img = random_image(12, 12, 3, rng);
    Image mask(12, 12, 1, 0.0f);

    SUBCASE("empty mask is the identity") {
        const Image out = glove_overlay(img, mask, {0.2f, 0.4f, 0.9f}, 0.7f);
        CHECK(out.data == img.data);
    }
    SUBCASE("alpha 1 with white paints the mask region pure white") {
        for (int y = 3; y < 7; ++y)
            for (int x = 2; x < 9; ++x) mask.at(0, y, x) = 1.0f;
        const Image out = glove_overlay(img, mask, {1.0f, 1.0f, 1.0f}, 1.0f);
        for (int y = 0; y < 12; ++y) {
            for (int x = 0; x < 12; ++x) {
                for (int ch = 0; ch < 3; ++ch) {
                    if (mask.at(0, y, x) > 0.5f) {
                        CHECK(out.at(ch, y, x) == 1.0f);
                    } else {
                        CHECK(out.at(ch, y, x) == img.at(ch, y, x));
                    }
                }
            }
        }
    }
    SUBCASE("half blend matches the per-pixel closed form") {
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 6; ++x) mask.at(0, y, x) = 1.0f;
        const std::array<float, 3> blue = {0.1f, 0.2f, 0.9f};
        const Image out = glove_overlay(img, mask, blue, 0.5f);
        for (int y = 0; y < 12; ++y) {
            for (int x = 0; x < 6; ++x) {
                for (int ch = 0; ch < 3; ++ch) {
                    const float want = 0.5f * img.at(ch, y, x) + 0.5f * blue[ch];
                    CHECK(out.at(ch, y, x) == doctest::Approx(want).epsilon(1e-6));
                }
            }
        }
    }
    SUBCASE("shape and alpha validation") {
        Image bad_mask(10, 12, 1);
        CHECK_THROWS_AS(glove_overlay(img, bad_mask, {1, 1, 1}, 0.5f), std::invalid_argument);
        CHECK_THROWS_AS(glove_overlay(img, mask, {1, 1, 1}, 0.0f), std::invalid_argument);
        CHECK_THROWS_AS(glove_overlay(img, mask, {1, 1, 1}, 1.5f), std::invalid_argument);
    }
}

TEST_CASE("sample_augmentation") {
    SUBCASE("degenerate config always yields identity parameters") {
        AugmentConfig cfg;
        cfg.scales = {1};
        cfg.brightness_lo = cfg.brightness_hi = 1.0;
        cfg.rotation_jitter_deg = 0.0;
        cfg.noise_sigma = 0.0;
        Rng rng(1, "augmentation");
        for (int i = 0; i < 50; ++i) {
            const auto p = sample_augmentation(cfg, rng);
            CHECK(p.s == 1);
            CHECK(p.b == 1.0);
            CHECK(p.rotation_deg == 0.0);
            CHECK(p.sigma == 0.0);
            CHECK(!p.glove);
        }
    }
    SUBCASE("same seed gives an identical parameter sequence") {
        AugmentConfig cfg;
        cfg.glove_colors = {{0.1f, 0.8f, 0.3f}, {0.9f, 0.9f, 0.9f}};
        cfg.p_glove = 0.5;
        Rng a(42, "augmentation"), b(42, "augmentation");
        for (int i = 0; i < 200; ++i) {
            const auto pa = sample_augmentation(cfg, a);
            const auto pb = sample_augmentation(cfg, b);
            CHECK(pa.to_line() == pb.to_line());
        }
    }
    SUBCASE("scale draws are uniform within 2% per bin over 1e5 draws") {
        AugmentConfig cfg;
        Rng rng(314, "augmentation");
        std::map<int, int> histo;
        const int n = 100000;
        for (int i = 0; i < n; ++i) histo[sample_augmentation(cfg, rng).s]++;
        for (const int s : {1, 2, 4, 8}) {
            const double freq = static_cast<double>(histo[s]) / n;
            CHECK(std::abs(freq - 0.25) < 0.02);
        }
    }
    SUBCASE("parameter line round trip") {
        AugmentConfig cfg;
        cfg.glove_colors = {{0.25f, 0.5f, 0.75f}};
        cfg.p_glove = 1.0;
        Rng rng(7, "augmentation");
        const auto p = sample_augmentation(cfg, rng);
        const auto q = AugmentParams::from_line(p.to_line());
        CHECK(q.s == p.s);
        CHECK(q.b == p.b);
        CHECK(q.rotation_deg == p.rotation_deg);
        CHECK(q.sigma == p.sigma);
        CHECK(q.glove == p.glove);
        CHECK(q.glove_color == p.glove_color);
        CHECK_THROWS_AS(AugmentParams::from_line("s=1 b=1"), std::runtime_error);
        CHECK_THROWS_AS(AugmentParams::from_line("junk"), std::runtime_error);
    }
    SUBCASE("config validation") {
        AugmentConfig cfg;
        cfg.scales = {3};
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg = AugmentConfig{};
        cfg.scales.clear();
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg = AugmentConfig{};
        cfg.p_glove = 0.5;  // no colors configured
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}
