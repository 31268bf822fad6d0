#pragma once

#include <vector>

#include "okpose/detect/detect.hpp"
#include "okpose/geom/geom.hpp"

namespace okpose::eval {

/// Detections and truth for one image, paired up for mAP computation.
struct ImageDetections {
    std::vector<detect::DetectedObject> dets;
    std::vector<detect::GroundTruthObject> gts;
};

/// Average precision for one class at an IoU threshold, all-points
/// interpolation. Detections are matched greedily in score order, one
/// detection per truth box. Returns -1 when the class has no truth instances.
double average_precision(const std::vector<ImageDetections>& images, detect::ObjClass cls,
                         double iou_thresh);

/// Mean AP over the classes that have truth instances.
double mean_average_precision(const std::vector<ImageDetections>& images, double iou_thresh = 0.5);

/// Fraction of landmarks whose prediction lands within `frac` of the truth
/// hand size (max side of the truth landmark extent) of the truth point.
double pck(const std::vector<std::pair<geom::HandLandmarks2D, geom::HandLandmarks2D>>&
               pred_truth_pairs,
           double frac = 0.2);

/// Area under the ROC curve via midranks; tied scores earn half credit, so the
/// result equals exhaustive pairwise counting exactly. Labels are 0/1.
/// Throws unless both label values are present.
double auc(const std::vector<std::pair<double, int>>& score_label);

/// Root-mean-square Euclidean error over 3D point pairs.
double rmse3d(const std::vector<std::pair<geom::Point3, geom::Point3>>& pred_truth_pairs);

/// Classification rates of thresholded scores against 0/1 labels.
struct BinaryRates {
    int tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0.0;  // detection rate among positives
    double tnr = 0.0;  // rejection rate among negatives
};
BinaryRates binary_rates(const std::vector<std::pair<double, int>>& score_label,
                         double threshold = 0.5);

}  // namespace okpose::eval
