#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "okpose/detect/detect.hpp"
#include "okpose/nn/rng.hpp"

using namespace okpose;
using namespace okpose::detect;
using geom::BBox;
using okpose::nn::Rng;

namespace {

// Independent greedy-suppression oracle: no sorting, rescans for the current
// maximum each round.
std::vector<int> nms_oracle(const std::vector<DetectedObject>& objects, double iou_thresh) {
    std::vector<bool> alive(objects.size(), true);
    std::vector<int> kept;
    for (;;) {
        int best = -1;
        for (size_t i = 0; i < objects.size(); ++i) {
            if (!alive[i]) continue;
            if (best < 0 || objects[i].score > objects[static_cast<size_t>(best)].score) {
                best = static_cast<int>(i);
            }
        }
        if (best < 0) break;
        kept.push_back(best);
        alive[static_cast<size_t>(best)] = false;
        for (size_t i = 0; i < objects.size(); ++i) {
            if (!alive[i] || objects[i].cls != objects[static_cast<size_t>(best)].cls) continue;
            if (geom::iou(objects[static_cast<size_t>(best)].box, objects[i].box) > iou_thresh) {
                alive[i] = false;
            }
        }
    }
    return kept;
}

// Exhaustive pairing oracle: enumerate every hand-body pair, then apply the
// argmin-then-gate rule per hand.
std::vector<Association> associate_oracle(const std::vector<DetectedObject>& hands,
                                          const std::vector<DetectedObject>& bodies,
                                          double ratio) {
    std::vector<Association> out;
    for (size_t hi = 0; hi < hands.size(); ++hi) {
        std::vector<std::pair<double, int>> cand;
        const auto hc = hands[hi].box.center();
        for (size_t bi = 0; bi < bodies.size(); ++bi) {
            const auto bc = bodies[bi].box.center();
            cand.emplace_back(
                std::hypot(hc.x + hands[hi].assoc.x - bc.x, hc.y + hands[hi].assoc.y - bc.y),
                static_cast<int>(bi));
        }
        Association a;
        a.hand_index = static_cast<int>(hi);
        a.body_index = -1;
        if (!cand.empty()) {
            std::sort(cand.begin(), cand.end(), [&](const auto& x, const auto& y) {
                if (x.first != y.first) return x.first < y.first;
                const auto& bx = bodies[static_cast<size_t>(x.second)];
                const auto& by = bodies[static_cast<size_t>(y.second)];
                if (bx.score != by.score) return bx.score > by.score;
                return x.second < y.second;
            });
            a.residual = cand[0].first;
            const auto& body = bodies[static_cast<size_t>(cand[0].second)];
            if (cand[0].first <= ratio * body.box.diagonal()) a.body_index = cand[0].second;
        }
        out.push_back(a);
    }
    return out;
}

BBox random_box(Rng& rng, double span, double min_side, double max_side) {
    const double w = rng.uniform(min_side, max_side);
    const double h = rng.uniform(min_side, max_side);
    const double l = rng.uniform(0.0, span - w);
    const double t = rng.uniform(0.0, span - h);
    return {l, t, l + w, t + h};
}

}  // namespace

TEST_CASE("decode: empty grids, malformed input, threshold semantics") {
    GridSpec grid;
    auto raw = nn::Tensor::zeros(
        {static_cast<int>(grid.anchors.size()) * kChannelsPerAnchor, grid.gh, grid.gw});
    // Everything at logit 0 gives score 0.5*0.5 = 0.25; threshold just above.
    CHECK(decode(*raw, grid, 0.26).empty());
    CHECK(decode(*raw, grid, 0.24).size() ==
          grid.anchors.size() * static_cast<size_t>(grid.gh) * grid.gw);

    for (auto& v : raw->data) v = 0.0f;
    for (int a = 0; a < 3; ++a)
        for (int i = 0; i < grid.gh * grid.gw; ++i)
            raw->data[(a * kChannelsPerAnchor + kChObj) * grid.gh * grid.gw + i] = -1e9f;
    CHECK(decode(*raw, grid, 0.25).empty());

    auto bad = nn::Tensor::zeros({10, grid.gh, grid.gw});
    CHECK_THROWS_AS(decode(*bad, grid, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(decode(*raw, grid, 0.0), std::invalid_argument);
}

TEST_CASE("encode-decode round trip on 1000 random instances") {
    GridSpec grid;
    Rng rng(31);
    double worst_px = 0.0, worst_rad = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        // Distinct cells so no two objects fight over one anchor slot.
        std::set<std::pair<int, int>> used;
        std::vector<GroundTruthObject> gts;
        const int n = rng.uniform_int(1, 6);
        while (static_cast<int>(gts.size()) < n) {
            const int gx = rng.uniform_int(0, grid.gw - 1);
            const int gy = rng.uniform_int(0, grid.gh - 1);
            if (!used.insert({gx, gy}).second) continue;
            GroundTruthObject gt;
            const double cx = (gx + rng.uniform(0.2, 0.8)) * grid.stride;
            const double cy = (gy + rng.uniform(0.2, 0.8)) * grid.stride;
            const bool hand = rng.bernoulli(0.6);
            const double w = hand ? rng.uniform(18.0, 60.0) : rng.uniform(60.0, 160.0);
            const double h = hand ? rng.uniform(18.0, 60.0) : rng.uniform(40.0, 120.0);
            gt.box = {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
            gt.cls = hand ? ObjClass::hand : ObjClass::body;
            if (hand) {
                gt.angle = rng.uniform(-3.1, 3.1);
                gt.assoc = {rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0)};
            }
            gts.push_back(gt);
        }
        auto raw = encode(gts, grid);
        auto dets = decode(*raw, grid, 0.25);
        REQUIRE(dets.size() == gts.size());
        for (const auto& gt : gts) {
            // Find the decoded object nearest this ground truth.
            double best_d = 1e18;
            const DetectedObject* match = nullptr;
            for (const auto& det : dets) {
                const auto gc = gt.box.center();
                const auto dc = det.box.center();
                const double d = std::hypot(gc.x - dc.x, gc.y - dc.y);
                if (d < best_d) {
                    best_d = d;
                    match = &det;
                }
            }
            REQUIRE(match != nullptr);
            CHECK((match->cls == gt.cls));
            for (const double delta :
                 {match->box.l - gt.box.l, match->box.t - gt.box.t, match->box.r - gt.box.r,
                  match->box.b - gt.box.b}) {
                worst_px = std::max(worst_px, std::abs(delta));
            }
            if (gt.cls == ObjClass::hand) {
                worst_rad = std::max(
                    worst_rad, std::abs(geom::normalize_angle(match->angle - gt.angle)));
                CHECK(std::abs(match->assoc.x - gt.assoc.x) < 0.1);
                CHECK(std::abs(match->assoc.y - gt.assoc.y) < 0.1);
            }
        }
    }
    CHECK(worst_px < 0.5);
    CHECK(worst_rad < 1e-3);
}

TEST_CASE("nms: trivial cases") {
    DetectedObject a;
    a.box = {0, 0, 10, 10};
    a.score = 0.9;
    CHECK(nms({a}, 0.45).size() == 1);

    DetectedObject b = a;
    b.score = 0.8;
    const auto kept = nms({a, b}, 0.45);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.9);

    // Different classes never suppress each other.
    DetectedObject body = a;
    body.cls = ObjClass::body;
    body.score = 0.5;
    CHECK(nms({a, body}, 0.45).size() == 2);
}

TEST_CASE("nms matches the brute-force oracle on 1000 random instances") {
    Rng rng(32);
    for (const double thresh : {0.25, 0.45}) {
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<DetectedObject> objs;
            const int n = rng.uniform_int(1, 50);
            for (int i = 0; i < n; ++i) {
                DetectedObject o;
                o.box = random_box(rng, 224.0, 8.0, 90.0);
                o.cls = rng.bernoulli(0.7) ? ObjClass::hand : ObjClass::body;
                o.score = rng.uniform(0.05, 1.0);
                objs.push_back(o);
            }
            const auto got = nms(objs, thresh);
            const auto want = nms_oracle(objs, thresh);
            REQUIRE(got.size() == want.size());
            for (size_t i = 0; i < got.size(); ++i) {
                const auto& w = objs[static_cast<size_t>(want[i])];
                CHECK(got[i].score == w.score);
                CHECK(got[i].box.l == w.box.l);
                CHECK(got[i].box.t == w.box.t);
            }
        }
    }
}

TEST_CASE("associate: trivial cases and the exhaustive oracle") {
    DetectedObject hand;
    hand.box = {100, 100, 140, 140};
    hand.cls = ObjClass::hand;
    hand.score = 0.9;
    DetectedObject body;
    body.box = {80, 60, 300, 400};
    body.cls = ObjClass::body;
    body.score = 0.8;

    SUBCASE("exact displacement matches with residual 0") {
        const auto hc = hand.box.center();
        const auto bc = body.box.center();
        hand.assoc = {bc.x - hc.x, bc.y - hc.y};
        const auto assocs = associate({hand}, {body}, 0.3);
        REQUIRE(assocs.size() == 1);
        CHECK(assocs[0].body_index == 0);
        CHECK(assocs[0].residual == doctest::Approx(0.0));
    }
    SUBCASE("no bodies leaves a hand unmatched") {
        const auto assocs = associate({hand}, {}, 0.3);
        REQUIRE(assocs.size() == 1);
        CHECK(assocs[0].body_index == -1);
    }
    SUBCASE("residual gate rejects far matches") {
        hand.assoc = {5000.0, 0.0};
        const auto assocs = associate({hand}, {body}, 0.3);
        REQUIRE(assocs.size() == 1);
        CHECK(assocs[0].body_index == -1);
        CHECK(assocs[0].residual > 0.0);
    }
    SUBCASE("random scenes equal the oracle") {
        Rng rng(33);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<DetectedObject> hands, bodies;
            const int nh = rng.uniform_int(0, 5);
            const int nb = rng.uniform_int(0, 3);
            for (int i = 0; i < nh; ++i) {
                DetectedObject h;
                h.box = random_box(rng, 448.0, 20.0, 60.0);
                h.cls = ObjClass::hand;
                h.score = rng.uniform(0.3, 1.0);
                h.assoc = {rng.uniform(-150.0, 150.0), rng.uniform(-150.0, 150.0)};
                hands.push_back(h);
            }
            for (int i = 0; i < nb; ++i) {
                DetectedObject b;
                b.box = random_box(rng, 448.0, 80.0, 250.0);
                b.cls = ObjClass::body;
                b.score = rng.uniform(0.3, 1.0);
                bodies.push_back(b);
            }
            const auto got = associate(hands, bodies, 0.5);
            const auto want = associate_oracle(hands, bodies, 0.5);
            REQUIRE(got.size() == want.size());
            for (size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].hand_index == want[i].hand_index);
                CHECK(got[i].body_index == want[i].body_index);
                if (got[i].body_index >= 0) {
                    CHECK(got[i].residual == doctest::Approx(want[i].residual));
                }
            }
        }
    }
}

TEST_CASE("filter_patient: boundary exact at the threshold") {
    const BBox bed{0, 0, 100, 70};
    auto body_with_iob = [&](double frac) {
        // Body of height 100 sliding so the covered fraction is frac.
        DetectedObject b;
        b.cls = ObjClass::body;
        b.box = {0, 70.0 - frac * 100.0, 100, 170.0 - frac * 100.0};
        return b;
    };
    const auto b70 = body_with_iob(0.70);
    const auto b65 = body_with_iob(0.65);
    const auto b64 = body_with_iob(0.64);
    REQUIRE(geom::iob(b65.box, bed) == doctest::Approx(0.65));

    const auto part = filter_patient({b70, b65, b64}, bed, 0.65);
    CHECK(part.patients == std::vector<int>{0});          // 0.70 > 0.65
    CHECK(part.technicians == std::vector<int>{1, 2});    // 0.65 and 0.64 stay technicians

    // Fully-on-bed body is a patient.
    DetectedObject inside;
    inside.cls = ObjClass::body;
    inside.box = {10, 10, 60, 60};
    CHECK(filter_patient({inside}, bed, 0.65).patients.size() == 1);

    // Monotonicity: classification never flips patient->technician as iob rises.
    Rng rng(34);
    for (int trial = 0; trial < 200; ++trial) {
        const double lo = rng.uniform(0.0, 1.0);
        const double hi = rng.uniform(lo, 1.0);
        const auto a = body_with_iob(lo);
        const auto b = body_with_iob(hi);
        const auto p = filter_patient({a, b}, bed, 0.65);
        const bool a_patient = std::count(p.patients.begin(), p.patients.end(), 0) > 0;
        const bool b_patient = std::count(p.patients.begin(), p.patients.end(), 1) > 0;
        if (a_patient) CHECK(b_patient);
    }
}

TEST_CASE("detection dump line is stable") {
    DetectedObject h;
    h.box = {10.5, 20.25, 50.5, 60.75};
    h.cls = ObjClass::hand;
    h.score = 0.875;
    h.angle = 0.5;
    h.assoc = {12.0, -8.0};
    CHECK(dump_line(7, h, 2) ==
          "frame=7 class=hand score=0.875000 box=10.500000,20.250000,50.500000,60.750000 "
          "angle_rad=0.500000 dx=12.000000 dy=-8.000000 body=2");
    DetectedObject b;
    b.box = {0, 0, 100, 200};
    b.cls = ObjClass::body;
    b.score = 0.5;
    CHECK(dump_line(8, b, -1) ==
          "frame=8 class=body score=0.500000 box=0.000000,0.000000,100.000000,200.000000");
}
