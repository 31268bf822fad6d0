#include "okpose/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace okpose::eval {

double average_precision(const std::vector<ImageDetections>& images, detect::ObjClass cls,
                         double iou_thresh) {
    int npos = 0;
    for (const auto& img : images) {
        for (const auto& gt : img.gts) {
            if (gt.cls == cls) ++npos;
        }
    }
    if (npos == 0) return -1.0;

    // One row per detection of the class: (score, image, det index).
    struct Row {
        double score;
        int image;
        int det;
    };
    std::vector<Row> rows;
    for (int i = 0; i < static_cast<int>(images.size()); ++i) {
        for (int d = 0; d < static_cast<int>(images[i].dets.size()); ++d) {
            if (images[i].dets[d].cls == cls) rows.push_back({images[i].dets[d].score, i, d});
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.score > b.score; });

    std::vector<std::vector<bool>> claimed(images.size());
    for (size_t i = 0; i < images.size(); ++i) claimed[i].assign(images[i].gts.size(), false);

    std::vector<double> rec, prec;
    int tp = 0, fp = 0;
    for (const auto& row : rows) {
        const auto& img = images[row.image];
        const auto& det = img.dets[row.det];
        int best = -1;
        double best_iou = 0.0;
        for (int g = 0; g < static_cast<int>(img.gts.size()); ++g) {
            if (img.gts[g].cls != cls || claimed[row.image][g]) continue;
            const double v = geom::iou(det.box, img.gts[g].box);
            if (v > best_iou) {
                best_iou = v;
                best = g;
            }
        }
        if (best >= 0 && best_iou >= iou_thresh) {
            claimed[row.image][best] = true;
            ++tp;
        } else {
            ++fp;
        }
        rec.push_back(static_cast<double>(tp) / npos);
        prec.push_back(static_cast<double>(tp) / (tp + fp));
    }

    // Area under the precision/recall curve with precision made monotone
    // non-increasing, summed at every recall change.
    std::vector<double> mrec{0.0}, mpre{0.0};
    mrec.insert(mrec.end(), rec.begin(), rec.end());
    mpre.insert(mpre.end(), prec.begin(), prec.end());
    mrec.push_back(1.0);
    mpre.push_back(0.0);
    for (int i = static_cast<int>(mpre.size()) - 2; i >= 0; --i) {
        mpre[i] = std::max(mpre[i], mpre[i + 1]);
    }
    double ap = 0.0;
    for (size_t i = 0; i + 1 < mrec.size(); ++i) {
        if (mrec[i + 1] != mrec[i]) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
    }
    return ap;
}

double mean_average_precision(const std::vector<ImageDetections>& images, double iou_thresh) {
    double sum = 0.0;
    int n = 0;
    for (detect::ObjClass cls : {detect::ObjClass::hand, detect::ObjClass::body}) {
        const double ap = average_precision(images, cls, iou_thresh);
        if (ap >= 0.0) {
            sum += ap;
            ++n;
        }
    }
    return n > 0 ? sum / n : 0.0;
}

double pck(const std::vector<std::pair<geom::HandLandmarks2D, geom::HandLandmarks2D>>&
               pred_truth_pairs,
           double frac) {
    if (pred_truth_pairs.empty()) throw std::invalid_argument("pck: no landmark pairs");
    long hit = 0, total = 0;
    for (const auto& [pred, truth] : pred_truth_pairs) {
        double lo_x = std::numeric_limits<double>::max(), hi_x = -lo_x;
        double lo_y = lo_x, hi_y = -lo_x;
        for (const auto& lm : truth) {
            lo_x = std::min(lo_x, lm.x);
            hi_x = std::max(hi_x, lm.x);
            lo_y = std::min(lo_y, lm.y);
            hi_y = std::max(hi_y, lm.y);
        }
        const double thresh = frac * std::max(hi_x - lo_x, hi_y - lo_y);
        for (int i = 0; i < geom::kNumHandLandmarks; ++i) {
            const double d = std::hypot(pred[i].x - truth[i].x, pred[i].y - truth[i].y);
            if (d <= thresh) ++hit;
            ++total;
        }
    }
    return static_cast<double>(hit) / total;
}

double auc(const std::vector<std::pair<double, int>>& score_label) {
    long n_pos = 0, n_neg = 0;
    for (const auto& [s, y] : score_label) {
        (void)s;
        if (y == 1)
            ++n_pos;
        else if (y == 0)
            ++n_neg;
        else
            throw std::invalid_argument("auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: need both classes");

    // Mann-Whitney U via midranks: rank all scores ascending, assign tied
    // scores the mean of their rank range, sum positive ranks.
    std::vector<int> order(score_label.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return score_label[a].first < score_label[b].first;
    });
    std::vector<double> rank(order.size(), 0.0);
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() &&
               score_label[order[j + 1]].first == score_label[order[i]].first) {
            ++j;
        }
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    for (size_t k = 0; k < score_label.size(); ++k) {
        if (score_label[k].second == 1) pos_rank_sum += rank[k];
    }
    const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double rmse3d(const std::vector<std::pair<geom::Point3, geom::Point3>>& pred_truth_pairs) {
    if (pred_truth_pairs.empty()) throw std::invalid_argument("rmse3d: no point pairs");
    double sq = 0.0;
    for (const auto& [p, t] : pred_truth_pairs) {
        const double dx = p.x - t.x, dy = p.y - t.y, dz = p.z - t.z;
        sq += dx * dx + dy * dy + dz * dz;
    }
    return std::sqrt(sq / pred_truth_pairs.size());
}

BinaryRates binary_rates(const std::vector<std::pair<double, int>>& score_label,
                         double threshold) {
    BinaryRates r;
    for (const auto& [s, y] : score_label) {
        const bool pred = s >= threshold;
        if (y == 1) {
            pred ? ++r.tp : ++r.fn;
        } else if (y == 0) {
            pred ? ++r.fp : ++r.tn;
        } else {
            throw std::invalid_argument("binary_rates: labels must be 0 or 1");
        }
    }
    if (r.tp + r.fn > 0) r.tpr = static_cast<double>(r.tp) / (r.tp + r.fn);
    if (r.tn + r.fp > 0) r.tnr = static_cast<double>(r.tn) / (r.tn + r.fp);
    return r;
}

}  // namespace okpose::eval
