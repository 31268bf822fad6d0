#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "okpose/eval/metrics.hpp"
#include "okpose/nn/rng.hpp"

using namespace okpose;

namespace {

detect::DetectedObject det(double l, double t, double r, double b, detect::ObjClass cls,
                           double score) {
    detect::DetectedObject d;
    d.box = {l, t, r, b};
    d.cls = cls;
    d.score = score;
    return d;
}

detect::GroundTruthObject gt(double l, double t, double r, double b, detect::ObjClass cls) {
    detect::GroundTruthObject g;
    g.box = {l, t, r, b};
    g.cls = cls;
    return g;
}

/// Exhaustive pairwise AUC: every (positive, negative) pair scores 1 when the
/// positive outranks the negative, 0.5 on a tie.
double auc_pairwise_oracle(const std::vector<std::pair<double, int>>& data) {
    double wins = 0.0;
    long pairs = 0;
    for (const auto& [sp, yp] : data) {
        if (yp != 1) continue;
        for (const auto& [sn, yn] : data) {
            if (yn != 0) continue;
            ++pairs;
            if (sp > sn)
                wins += 1.0;
            else if (sp == sn)
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

geom::HandLandmarks2D grid_landmarks(double origin_x, double origin_y, double step) {
    geom::HandLandmarks2D lms{};
    for (int i = 0; i < geom::kNumHandLandmarks; ++i) {
        lms[i] = {origin_x + (i % 5) * step, origin_y + (i / 5) * step, 1.0};
    }
    return lms;
}

}  // namespace

TEST_CASE("average precision on hand-checkable scenes") {
    using detect::ObjClass;

    SUBCASE("perfect detections give AP 1 per class") {
        eval::ImageDetections img;
        img.gts = {gt(10, 10, 40, 40, ObjClass::hand), gt(60, 60, 150, 180, ObjClass::body)};
        img.dets = {det(10, 10, 40, 40, ObjClass::hand, 0.9),
                    det(60, 60, 150, 180, ObjClass::body, 0.8)};
        std::vector<eval::ImageDetections> images{img};
        CHECK(eval::average_precision(images, ObjClass::hand, 0.5) == doctest::Approx(1.0));
        CHECK(eval::average_precision(images, ObjClass::body, 0.5) == doctest::Approx(1.0));
        CHECK(eval::mean_average_precision(images) == doctest::Approx(1.0));
    }

    SUBCASE("a confident false positive above one true positive halves nothing but ranks") {
        // Ranking: FP(0.9), TP(0.8). Recall steps to 1 at precision 1/2.
        eval::ImageDetections img;
        img.gts = {gt(10, 10, 40, 40, ObjClass::hand)};
        img.dets = {det(200, 200, 230, 230, ObjClass::hand, 0.9),
                    det(10, 10, 40, 40, ObjClass::hand, 0.8)};
        std::vector<eval::ImageDetections> images{img};
        CHECK(eval::average_precision(images, ObjClass::hand, 0.5) == doctest::Approx(0.5));
    }

    SUBCASE("duplicate detections of one truth count once") {
        eval::ImageDetections img;
        img.gts = {gt(10, 10, 40, 40, ObjClass::hand)};
        img.dets = {det(10, 10, 40, 40, ObjClass::hand, 0.9),
                    det(11, 11, 41, 41, ObjClass::hand, 0.8)};
        std::vector<eval::ImageDetections> images{img};
        // TP then FP at full recall: AP = 1.
        CHECK(eval::average_precision(images, ObjClass::hand, 0.5) == doctest::Approx(1.0));
    }

    SUBCASE("missed truths cap recall") {
        // Two truths, one found: precision 1 up to recall 0.5, nothing beyond.
        eval::ImageDetections img;
        img.gts = {gt(10, 10, 40, 40, ObjClass::hand), gt(100, 100, 130, 130, ObjClass::hand)};
        img.dets = {det(10, 10, 40, 40, ObjClass::hand, 0.9)};
        std::vector<eval::ImageDetections> images{img};
        CHECK(eval::average_precision(images, ObjClass::hand, 0.5) == doctest::Approx(0.5));
    }

    SUBCASE("class confusion is a false positive, not a match") {
        eval::ImageDetections img;
        img.gts = {gt(10, 10, 40, 40, ObjClass::hand)};
        img.dets = {det(10, 10, 40, 40, ObjClass::body, 0.9)};
        std::vector<eval::ImageDetections> images{img};
        CHECK(eval::average_precision(images, ObjClass::hand, 0.5) == doctest::Approx(0.0));
        // No body truth exists: body AP is undefined and excluded from the mean.
        CHECK(eval::average_precision(images, ObjClass::body, 0.5) == -1.0);
        CHECK(eval::mean_average_precision(images) == doctest::Approx(0.0));
    }

    SUBCASE("matching is per image") {
        // The second image's detection cannot claim the first image's truth.
        eval::ImageDetections a, b;
        a.gts = {gt(10, 10, 40, 40, ObjClass::hand)};
        b.dets = {det(10, 10, 40, 40, ObjClass::hand, 0.9)};
        std::vector<eval::ImageDetections> images{a, b};
        CHECK(eval::average_precision(images, ObjClass::hand, 0.5) == doctest::Approx(0.0));
    }

    SUBCASE("IoU threshold gates the match") {
        eval::ImageDetections img;
        img.gts = {gt(0, 0, 100, 100, ObjClass::hand)};
        // Overlap box [0,100]x[0,60]: IoU = 0.6.
        img.dets = {det(0, 0, 100, 60, ObjClass::hand, 0.9)};
        std::vector<eval::ImageDetections> images{img};
        CHECK(eval::average_precision(images, ObjClass::hand, 0.55) == doctest::Approx(1.0));
        CHECK(eval::average_precision(images, ObjClass::hand, 0.65) == doctest::Approx(0.0));
    }
}

TEST_CASE("landmark accuracy normalizes by hand size") {
    auto truth = grid_landmarks(100, 100, 10);  // extent 40 x 30 -> size 40
    // Threshold at frac 0.2: 8 px.
    auto pred = truth;
    CHECK(eval::pck({{pred, truth}}, 0.2) == doctest::Approx(1.0));

    // Push 5 landmarks just past the threshold, leave 16 just inside.
    for (int i = 0; i < geom::kNumHandLandmarks; ++i) {
        pred[i].x += (i < 5) ? 8.5 : 7.5;
    }
    CHECK(eval::pck({{pred, truth}}, 0.2) == doctest::Approx(16.0 / 21.0));

    // A bigger hand forgives the same pixel error.
    auto big_truth = grid_landmarks(100, 100, 20);  // size 80 -> threshold 16
    auto big_pred = big_truth;
    for (auto& lm : big_pred) lm.x += 8.5;
    CHECK(eval::pck({{big_pred, big_truth}}, 0.2) == doctest::Approx(1.0));

    // Averaging runs over all pairs' landmarks.
    CHECK(eval::pck({{pred, truth}, {truth, truth}}, 0.2) ==
          doctest::Approx((16.0 + 21.0) / 42.0));

    CHECK_THROWS_AS(eval::pck({}, 0.2), std::invalid_argument);
}

TEST_CASE("rank-based separability equals exhaustive pair counting") {
    SUBCASE("hand-checkable values") {
        // Perfect separation.
        CHECK(eval::auc({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}}) == doctest::Approx(1.0));
        // Perfectly wrong.
        CHECK(eval::auc({{0.1, 1}, {0.9, 0}}) == doctest::Approx(0.0));
        // All scores tied: chance level by the half-credit rule.
        CHECK(eval::auc({{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}}) == doctest::Approx(0.5));
        // One crossing among 2x2 pairs: 3 wins + 1 loss -> 0.75.
        CHECK(eval::auc({{0.9, 1}, {0.4, 1}, {0.6, 0}, {0.1, 0}}) == doctest::Approx(0.75));
    }

    SUBCASE("random instances with heavy ties match the pairwise oracle") {
        nn::Rng rng(77);
        for (int trial = 0; trial < 200; ++trial) {
            const int n = rng.uniform_int(5, 60);
            std::vector<std::pair<double, int>> data;
            bool has_pos = false, has_neg = false;
            for (int i = 0; i < n; ++i) {
                // Quantized scores force frequent exact ties.
                const double s = rng.uniform_int(0, 9) / 9.0;
                const int y = rng.bernoulli(0.5) ? 1 : 0;
                (y ? has_pos : has_neg) = true;
                data.push_back({s, y});
            }
            if (!has_pos || !has_neg) continue;
            CHECK(eval::auc(data) == doctest::Approx(auc_pairwise_oracle(data)).epsilon(1e-9));
        }
    }

    SUBCASE("degenerate inputs throw") {
        CHECK_THROWS_AS(eval::auc({{0.5, 1}}), std::invalid_argument);
        CHECK_THROWS_AS(eval::auc({{0.5, 1}, {0.6, 1}}), std::invalid_argument);
        CHECK_THROWS_AS(eval::auc({{0.5, 1}, {0.6, 2}}), std::invalid_argument);
    }
}

TEST_CASE("3D error and thresholded rates") {
    SUBCASE("rmse") {
        std::vector<std::pair<geom::Point3, geom::Point3>> pairs = {
            {{1, 2, 3}, {1, 2, 3}},
            {{1, 0, 0}, {0, 0, 0}},  // error 1
            {{0, 3, 4}, {0, 0, 0}},  // error 5
        };
        CHECK(eval::rmse3d(pairs) == doctest::Approx(std::sqrt((0.0 + 1.0 + 25.0) / 3.0)));
        CHECK_THROWS_AS(eval::rmse3d({}), std::invalid_argument);
    }

    SUBCASE("binary rates at a threshold") {
        auto r = eval::binary_rates(
            {{0.9, 1}, {0.6, 1}, {0.4, 1}, {0.8, 0}, {0.2, 0}, {0.1, 0}}, 0.5);
        CHECK(r.tp == 2);
        CHECK(r.fn == 1);
        CHECK(r.fp == 1);
        CHECK(r.tn == 2);
        CHECK(r.tpr == doctest::Approx(2.0 / 3.0));
        CHECK(r.tnr == doctest::Approx(2.0 / 3.0));
        // Scores exactly at the threshold count as positive calls.
        auto edge = eval::binary_rates({{0.5, 1}, {0.5, 0}}, 0.5);
        CHECK(edge.tp == 1);
        CHECK(edge.fp == 1);
        CHECK_THROWS_AS(eval::binary_rates({{0.5, 3}}, 0.5), std::invalid_argument);
    }
}
