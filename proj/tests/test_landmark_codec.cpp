#include <doctest.h>

#include <cmath>

#include "okpose/landmark/heatmap.hpp"
#include "okpose/nn/rng.hpp"

using namespace okpose;
using namespace okpose::landmark;
using geom::HandLandmarks2D;
using okpose::nn::Rng;

namespace {

HandLandmarks2D one_point(int idx, double x, double y) {
    HandLandmarks2D lms{};
    for (auto& lm : lms) lm = {0.0, 0.0, 0.0};
    lms[idx] = {x, y, 1.0};
    return lms;
}

}  // namespace

TEST_CASE("heatmap encode: peak and zero-channel semantics") {
    // Crop pixel that lands exactly on heatmap cell (3, 5).
    const double px = to_crop_coord(5.0);
    const double py = to_crop_coord(3.0);
    auto hm = encode_heatmap(one_point(4, px, py), 64);
    CHECK(hm->shape == std::vector<int>{21, 16, 16});
    const auto* plane = hm->data.data() + 4 * 16 * 16;
    CHECK(plane[3 * 16 + 5] == 1.0f);  // exact peak at the keypoint cell
    float maxval = 0.0f;
    for (int i = 0; i < 16 * 16; ++i) maxval = std::max(maxval, plane[i]);
    CHECK(maxval == 1.0f);
    // Confidence-0 channels are all zero.
    for (int k = 0; k < 21; ++k) {
        if (k == 4) continue;
        const auto* p = hm->data.data() + k * 16 * 16;
        for (int i = 0; i < 16 * 16; ++i) CHECK(p[i] == 0.0f);
    }
    CHECK_THROWS_AS(encode_heatmap(one_point(0, 1, 1), 63), std::invalid_argument);
}

TEST_CASE("heatmap decode: impulse, tie, zero channel") {
    auto hm = nn::Tensor::zeros({21, 16, 16});
    hm->data[0 * 256 + 7 * 16 + 9] = 0.8f;  // lone impulse for channel 0
    const auto lms = decode_heatmap(*hm, 64);
    CHECK(lms[0].conf == doctest::Approx(0.8));
    CHECK(lms[0].x == doctest::Approx(to_crop_coord(9.0)));
    CHECK(lms[0].y == doctest::Approx(to_crop_coord(7.0)));
    // All-zero channel decodes to crop center with confidence 0.
    CHECK(lms[1].conf == 0.0);
    CHECK(lms[1].x == doctest::Approx(32.0));
    CHECK(lms[1].y == doctest::Approx(32.0));

    // Symmetric two-cell tie: equal neighbors left/right of the peak, no shift.
    auto tie = nn::Tensor::zeros({21, 16, 16});
    tie->data[5 * 16 + 8] = 1.0f;
    tie->data[5 * 16 + 7] = 0.5f;
    tie->data[5 * 16 + 9] = 0.5f;
    const auto tlms = decode_heatmap(*tie, 64);
    CHECK(tlms[0].x == doctest::Approx(to_crop_coord(8.0)));
}

TEST_CASE("heatmap: encode-decode round trip") {
    SUBCASE("off-grid points recover within 0.25 cells") {
        Rng rng(21);
        for (int trial = 0; trial < 500; ++trial) {
            const double hx = rng.uniform(1.0, 14.0);
            const double hy = rng.uniform(1.0, 14.0);
            auto hm = encode_heatmap(one_point(0, to_crop_coord(hx), to_crop_coord(hy)), 64);
            const auto lms = decode_heatmap(*hm, 64);
            const double ex = std::abs(to_heatmap_coord(lms[0].x) - hx);
            const double ey = std::abs(to_heatmap_coord(lms[0].y) - hy);
            CHECK(ex <= 0.25 + 1e-9);
            CHECK(ey <= 0.25 + 1e-9);
            CHECK(lms[0].conf > 0.9);  // sampled peak of a sub-pixel Gaussian
        }
    }
    SUBCASE("mean decode error < 0.3 cells over a random sweep") {
        Rng rng(22);
        double total = 0.0;
        const int n = 2000;
        for (int trial = 0; trial < n; ++trial) {
            const double hx = rng.uniform(2.0, 13.0);
            const double hy = rng.uniform(2.0, 13.0);
            auto hm = encode_heatmap(one_point(9, to_crop_coord(hx), to_crop_coord(hy)), 64);
            const auto lms = decode_heatmap(*hm, 64);
            total += std::hypot(to_heatmap_coord(lms[9].x) - hx, to_heatmap_coord(lms[9].y) - hy);
        }
        CHECK(total / n < 0.3);
    }
    SUBCASE("decoding is equivariant to whole-cell translation") {
        auto hm = encode_heatmap(one_point(0, to_crop_coord(5.3), to_crop_coord(6.7)), 64);
        auto shifted = nn::Tensor::zeros({21, 16, 16});
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                if (y >= 2 && x >= 3) {
                    shifted->data[y * 16 + x] = hm->data[(y - 2) * 16 + (x - 3)];
                }
            }
        const auto a = decode_heatmap(*hm, 64);
        const auto b = decode_heatmap(*shifted, 64);
        CHECK(to_heatmap_coord(b[0].x) == doctest::Approx(to_heatmap_coord(a[0].x) + 3.0));
        CHECK(to_heatmap_coord(b[0].y) == doctest::Approx(to_heatmap_coord(a[0].y) + 2.0));
    }
}
