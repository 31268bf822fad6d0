#include "okpose/train/losses.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace okpose::train {

using detect::GridSpec;
using detect::GroundTruthObject;
using detect::ObjClass;
using nn::Tensor;
using nn::TensorPtr;

DetectorLossParts detector_loss(const TensorPtr& raw, const std::vector<GroundTruthObject>& gts,
                                const GridSpec& grid, double pos_weight) {
    const int a_count = static_cast<int>(grid.anchors.size());
    const int want_c = a_count * detect::kChannelsPerAnchor;
    TensorPtr x = raw;
    if (x->rank() == 3) x = nn::reshape(x, {1, x->dim(0), x->dim(1), x->dim(2)});
    if (x->rank() != 4 || x->dim(0) != 1 || x->dim(1) != want_c || x->dim(2) != grid.gh ||
        x->dim(3) != grid.gw) {
        throw std::invalid_argument("detector_loss: raw map shape " + nn::shape_str(raw->shape) +
                                    " does not match the grid");
    }
    if (pos_weight <= 0.0) throw std::invalid_argument("detector_loss: pos_weight must be > 0");

    // Assign each truth object to its cell and best-shaped anchor. The first
    // object to claim a slot keeps it.
    struct Assigned {
        nn::AnchorCell cell;
        const GroundTruthObject* gt;
    };
    std::vector<Assigned> assigned;
    std::set<std::tuple<int, int, int>> used;
    for (const auto& gt : gts) {
        if (!gt.box.valid()) throw std::invalid_argument("detector_loss: invalid truth box");
        const auto c = gt.box.center();
        const int gx = std::clamp(static_cast<int>(c.x / grid.stride), 0, grid.gw - 1);
        const int gy = std::clamp(static_cast<int>(c.y / grid.stride), 0, grid.gh - 1);
        const int a = detect::best_anchor(grid, gt.box.width(), gt.box.height());
        if (!used.insert({a, gy, gx}).second) continue;
        assigned.push_back({{0, a, gy, gx}, &gt});
    }

    DetectorLossParts parts;

    // Objectness over the full grid.
    {
        std::vector<int> obj_channels;
        for (int a = 0; a < a_count; ++a) {
            obj_channels.push_back(a * detect::kChannelsPerAnchor + detect::kChObj);
        }
        auto logits = nn::select_channels(x, obj_channels);
        auto target = Tensor::zeros(logits->shape);
        auto weight = Tensor::full(logits->shape, 1.0f);
        for (const auto& as : assigned) {
            const size_t idx =
                (static_cast<size_t>(as.cell.a) * grid.gh + as.cell.y) * grid.gw + as.cell.x;
            target->data[idx] = 1.0f;
            weight->data[idx] = static_cast<float>(pos_weight);
        }
        parts.obj = nn::bce_with_logits(logits, target, weight);
    }

    auto zero_scalar = [] { return Tensor::scalar(0.0f); };
    if (assigned.empty()) {
        parts.box = zero_scalar();
        parts.cls = zero_scalar();
        parts.angle = zero_scalar();
        parts.assoc = zero_scalar();
        parts.total = nn::add(parts.obj, zero_scalar());
        return parts;
    }

    // Box + class terms over every assigned cell.
    {
        const int k = static_cast<int>(assigned.size());
        std::vector<nn::AnchorCell> cells;
        std::vector<float> gx_v, gy_v, aw_v, ah_v, corners_v, is_hand_v;
        for (const auto& as : assigned) {
            cells.push_back(as.cell);
            gx_v.push_back(static_cast<float>(as.cell.x));
            gy_v.push_back(static_cast<float>(as.cell.y));
            aw_v.push_back(static_cast<float>(grid.anchors[static_cast<size_t>(as.cell.a)].w));
            ah_v.push_back(static_cast<float>(grid.anchors[static_cast<size_t>(as.cell.a)].h));
            is_hand_v.push_back(as.gt->cls == ObjClass::hand ? 1.0f : 0.0f);
        }
        auto rows = nn::gather_anchor_rows(x, a_count, detect::kChannelsPerAnchor, cells);
        auto gx_t = Tensor::from({k, 1}, gx_v);
        auto gy_t = Tensor::from({k, 1}, gy_v);
        auto aw_t = Tensor::from({k, 1}, aw_v);
        auto ah_t = Tensor::from({k, 1}, ah_v);

        const float s = static_cast<float>(grid.stride);
        auto cx = nn::scale(nn::add(nn::sigmoid(nn::slice_channels(rows, 0, 1)), gx_t), s);
        auto cy = nn::scale(nn::add(nn::sigmoid(nn::slice_channels(rows, 1, 2)), gy_t), s);
        auto w = nn::hadamard(aw_t, nn::exp_op(nn::slice_channels(rows, 2, 3)));
        auto h = nn::hadamard(ah_t, nn::exp_op(nn::slice_channels(rows, 3, 4)));
        auto l = nn::sub(cx, nn::scale(w, 0.5f));
        auto t = nn::sub(cy, nn::scale(h, 0.5f));
        auto r = nn::add(cx, nn::scale(w, 0.5f));
        auto b = nn::add(cy, nn::scale(h, 0.5f));
        auto pred = nn::concat_channels(nn::concat_channels(l, t), nn::concat_channels(r, b));

        for (const auto& as : assigned) {
            corners_v.push_back(static_cast<float>(as.gt->box.l));
            corners_v.push_back(static_cast<float>(as.gt->box.t));
            corners_v.push_back(static_cast<float>(as.gt->box.r));
            corners_v.push_back(static_cast<float>(as.gt->box.b));
        }
        auto iou = nn::box_iou_pairs(pred, Tensor::from({k, 4}, corners_v));
        parts.box = nn::mean(nn::sub(Tensor::ones({k}), iou));

        auto diff = nn::sub(nn::slice_channels(rows, detect::kChClsHand, detect::kChClsHand + 1),
                            nn::slice_channels(rows, detect::kChClsBody, detect::kChClsBody + 1));
        parts.cls = nn::bce_with_logits(diff, Tensor::from({k, 1}, is_hand_v));
    }

    // Orientation and association, hand cells only.
    {
        std::vector<nn::AnchorCell> hand_cells;
        std::vector<float> sc_v, da_v;
        for (const auto& as : assigned) {
            if (as.gt->cls != ObjClass::hand) continue;
            hand_cells.push_back(as.cell);
            sc_v.push_back(static_cast<float>(std::sin(as.gt->angle)));
            sc_v.push_back(static_cast<float>(std::cos(as.gt->angle)));
            da_v.push_back(static_cast<float>(as.gt->assoc.x / grid.stride));
            da_v.push_back(static_cast<float>(as.gt->assoc.y / grid.stride));
        }
        if (hand_cells.empty()) {
            parts.angle = zero_scalar();
            parts.assoc = zero_scalar();
        } else {
            const int kh = static_cast<int>(hand_cells.size());
            auto rows = nn::gather_anchor_rows(x, a_count, detect::kChannelsPerAnchor, hand_cells);
            auto sc = nn::slice_channels(rows, detect::kChSin, detect::kChCos + 1);
            auto da = nn::slice_channels(rows, detect::kChDx, detect::kChDy + 1);
            parts.angle = nn::mse_loss(sc, Tensor::from({kh, 2}, sc_v));
            parts.assoc = nn::mse_loss(da, Tensor::from({kh, 2}, da_v));
        }
    }

    auto weighted = nn::add(nn::add(parts.box, parts.obj), nn::scale(parts.cls, 0.5f));
    weighted = nn::add(weighted, nn::scale(nn::add(parts.angle, parts.assoc), 0.5f));
    parts.total = weighted;
    return parts;
}

}  // namespace okpose::train
