#include "okpose/detect/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace okpose::detect {

namespace {

double shape_iou(double w1, double h1, double w2, double h2) {
    const double inter = std::min(w1, w2) * std::min(h1, h2);
    return inter / (w1 * h1 + w2 * h2 - inter);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

int best_anchor(const GridSpec& grid, double w, double h) {
    int best = 0;
    double best_iou = -1.0;
    for (size_t a = 0; a < grid.anchors.size(); ++a) {
        const double v = shape_iou(w, h, grid.anchors[a].w, grid.anchors[a].h);
        if (v > best_iou) {
            best_iou = v;
            best = static_cast<int>(a);
        }
    }
    return best;
}

std::vector<DetectedObject> decode(const nn::Tensor& raw, const GridSpec& grid,
                                   double conf_thresh) {
    if (!(conf_thresh > 0.0 && conf_thresh < 1.0)) {
        throw std::invalid_argument("decode: conf_thresh must be in (0,1)");
    }
    const int a_count = static_cast<int>(grid.anchors.size());
    const int want_c = a_count * kChannelsPerAnchor;
    int c, h, w;
    size_t base = 0;
    if (raw.rank() == 3) {
        c = raw.dim(0);
        h = raw.dim(1);
        w = raw.dim(2);
    } else if (raw.rank() == 4 && raw.dim(0) == 1) {
        c = raw.dim(1);
        h = raw.dim(2);
        w = raw.dim(3);
    } else {
        throw std::invalid_argument("decode: expected [C,H,W] or [1,C,H,W], got " +
                                    nn::shape_str(raw.shape));
    }
    if (c != want_c || h != grid.gh || w != grid.gw) {
        throw std::invalid_argument("decode: raw grid " + nn::shape_str(raw.shape) +
                                    " does not match " + std::to_string(want_c) + "x" +
                                    std::to_string(grid.gh) + "x" + std::to_string(grid.gw));
    }
    const auto at = [&](int anchor, int ch, int gy, int gx) -> double {
        const size_t idx =
            base + ((static_cast<size_t>(anchor) * kChannelsPerAnchor + ch) * h + gy) * w + gx;
        return raw.data[idx];
    };
    std::vector<DetectedObject> out;
    for (int anchor = 0; anchor < a_count; ++anchor) {
        for (int gy = 0; gy < grid.gh; ++gy) {
            for (int gx = 0; gx < grid.gw; ++gx) {
                const double obj = sigmoid(at(anchor, kChObj, gy, gx));
                // Two-class softmax probability.
                const double lh = at(anchor, kChClsHand, gy, gx);
                const double lb = at(anchor, kChClsBody, gy, gx);
                const double ph = 1.0 / (1.0 + std::exp(lb - lh));
                const bool is_hand = ph >= 0.5;
                const double score = obj * (is_hand ? ph : 1.0 - ph);
                if (score < conf_thresh) continue;
                const double cx = (gx + sigmoid(at(anchor, kChTx, gy, gx))) * grid.stride;
                const double cy = (gy + sigmoid(at(anchor, kChTy, gy, gx))) * grid.stride;
                const double bw = grid.anchors[anchor].w * std::exp(at(anchor, kChTw, gy, gx));
                const double bh = grid.anchors[anchor].h * std::exp(at(anchor, kChTh, gy, gx));
                DetectedObject det;
                det.box = {cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2};
                det.cls = is_hand ? ObjClass::hand : ObjClass::body;
                det.score = score;
                if (is_hand) {
                    det.angle = std::atan2(at(anchor, kChSin, gy, gx), at(anchor, kChCos, gy, gx));
                    det.assoc = {at(anchor, kChDx, gy, gx) * grid.stride,
                                 at(anchor, kChDy, gy, gx) * grid.stride};
                }
                out.push_back(det);
            }
        }
    }
    return out;
}

nn::TensorPtr encode(const std::vector<GroundTruthObject>& objects, const GridSpec& grid) {
    const int a_count = static_cast<int>(grid.anchors.size());
    auto raw = nn::Tensor::zeros({a_count * kChannelsPerAnchor, grid.gh, grid.gw});
    const auto put = [&](int anchor, int ch, int gy, int gx, double v) {
        raw->data[((static_cast<size_t>(anchor) * kChannelsPerAnchor + ch) * grid.gh + gy) *
                      grid.gw +
                  gx] = static_cast<float>(v);
    };
    // Background: objectness deeply negative everywhere.
    for (int anchor = 0; anchor < a_count; ++anchor) {
        for (int gy = 0; gy < grid.gh; ++gy) {
            for (int gx = 0; gx < grid.gw; ++gx) put(anchor, kChObj, gy, gx, -20.0);
        }
    }
    for (const auto& gt : objects) {
        if (!gt.box.valid()) throw std::invalid_argument("encode: invalid ground-truth box");
        const auto c = gt.box.center();
        const double fx = c.x / grid.stride;
        const double fy = c.y / grid.stride;
        const int gx = std::clamp(static_cast<int>(std::floor(fx)), 0, grid.gw - 1);
        const int gy = std::clamp(static_cast<int>(std::floor(fy)), 0, grid.gh - 1);
        const int anchor = best_anchor(grid, gt.box.width(), gt.box.height());
        const double ox = std::clamp(fx - gx, 1e-4, 1.0 - 1e-4);
        const double oy = std::clamp(fy - gy, 1e-4, 1.0 - 1e-4);
        put(anchor, kChTx, gy, gx, logit(ox));
        put(anchor, kChTy, gy, gx, logit(oy));
        put(anchor, kChTw, gy, gx, std::log(gt.box.width() / grid.anchors[anchor].w));
        put(anchor, kChTh, gy, gx, std::log(gt.box.height() / grid.anchors[anchor].h));
        put(anchor, kChObj, gy, gx, 20.0);
        put(anchor, kChClsHand, gy, gx, gt.cls == ObjClass::hand ? 10.0 : -10.0);
        put(anchor, kChClsBody, gy, gx, gt.cls == ObjClass::body ? 10.0 : -10.0);
        put(anchor, kChSin, gy, gx, std::sin(gt.angle));
        put(anchor, kChCos, gy, gx, std::cos(gt.angle));
        put(anchor, kChDx, gy, gx, gt.assoc.x / grid.stride);
        put(anchor, kChDy, gy, gx, gt.assoc.y / grid.stride);
    }
    return raw;
}

std::vector<DetectedObject> nms(const std::vector<DetectedObject>& objects, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) {
        throw std::invalid_argument("nms: iou_thresh must be in (0,1)");
    }
    std::vector<int> order(objects.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return objects[a].score > objects[b].score;
    });
    std::vector<bool> removed(objects.size(), false);
    std::vector<DetectedObject> out;
    for (size_t i = 0; i < order.size(); ++i) {
        const int idx = order[i];
        if (removed[idx]) continue;
        out.push_back(objects[idx]);
        for (size_t j = i + 1; j < order.size(); ++j) {
            const int other = order[j];
            if (removed[other] || objects[other].cls != objects[idx].cls) continue;
            if (geom::iou(objects[idx].box, objects[other].box) > iou_thresh) {
                removed[other] = true;
            }
        }
    }
    return out;
}

std::vector<Association> associate(const std::vector<DetectedObject>& hands,
                                   const std::vector<DetectedObject>& bodies,
                                   double max_residual_ratio) {
    std::vector<Association> out;
    out.reserve(hands.size());
    for (size_t hi = 0; hi < hands.size(); ++hi) {
        const auto hc = hands[hi].box.center();
        const double px = hc.x + hands[hi].assoc.x;
        const double py = hc.y + hands[hi].assoc.y;
        Association assoc;
        assoc.hand_index = static_cast<int>(hi);
        int best = -1;
        double best_res = 0.0;
        for (size_t bi = 0; bi < bodies.size(); ++bi) {
            const auto bc = bodies[bi].box.center();
            const double res = std::hypot(px - bc.x, py - bc.y);
            const bool better =
                best < 0 || res < best_res ||
                (res == best_res && bodies[bi].score > bodies[static_cast<size_t>(best)].score);
            if (better) {
                best = static_cast<int>(bi);
                best_res = res;
            }
        }
        if (best >= 0 && best_res <= max_residual_ratio * bodies[static_cast<size_t>(best)].box.diagonal()) {
            assoc.body_index = best;
            assoc.residual = best_res;
        } else {
            assoc.body_index = -1;
            assoc.residual = best >= 0 ? best_res : 0.0;
        }
        out.push_back(assoc);
    }
    return out;
}

PatientPartition filter_patient(const std::vector<DetectedObject>& bodies, const geom::BBox& bed,
                                double threshold) {
    if (!bed.valid()) throw std::invalid_argument("filter_patient: invalid bed box");
    PatientPartition part;
    for (size_t i = 0; i < bodies.size(); ++i) {
        if (geom::iob(bodies[i].box, bed) > threshold) {
            part.patients.push_back(static_cast<int>(i));
        } else {
            part.technicians.push_back(static_cast<int>(i));
        }
    }
    return part;
}

std::string dump_line(long frame_id, const DetectedObject& obj, int body_id) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "frame=" << frame_id << " class=" << (obj.cls == ObjClass::hand ? "hand" : "body")
       << " score=" << obj.score << " box=" << obj.box.l << "," << obj.box.t << "," << obj.box.r
       << "," << obj.box.b;
    if (obj.cls == ObjClass::hand) {
        os << " angle_rad=" << obj.angle << " dx=" << obj.assoc.x << " dy=" << obj.assoc.y
           << " body=" << (body_id >= 0 ? std::to_string(body_id) : std::string("none"));
    }
    return os.str();
}

}  // namespace okpose::detect
