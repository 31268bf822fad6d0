#pragma once

#include <string>
#include <vector>

#include "okpose/geom/geom.hpp"
#include "okpose/nn/tensor.hpp"

namespace okpose::detect {

enum class ObjClass { hand, body };

struct DetectedObject {
    geom::BBox box;
    ObjClass cls = ObjClass::hand;
    double score = 0.0;
    double angle = 0.0;       // hands only
    geom::Vec2 assoc{0, 0};   // hands only: hand-center -> body-center displacement, pixels
};

struct GroundTruthObject {
    geom::BBox box;
    ObjClass cls = ObjClass::hand;
    double angle = 0.0;
    geom::Vec2 assoc{0, 0};
};

struct AnchorSpec {
    double w = 0.0;
    double h = 0.0;
};

struct GridSpec {
    int stride = 16;
    int gw = 14;
    int gh = 14;
    std::vector<AnchorSpec> anchors = {{16, 16}, {28, 28}, {96, 56}};

    int image_w() const { return gw * stride; }
    int image_h() const { return gh * stride; }
};

// Per-anchor channel layout of the raw head output.
constexpr int kChTx = 0;
constexpr int kChTy = 1;
constexpr int kChTw = 2;
constexpr int kChTh = 3;
constexpr int kChObj = 4;
constexpr int kChClsHand = 5;
constexpr int kChClsBody = 6;
constexpr int kChSin = 7;
constexpr int kChCos = 8;
constexpr int kChDx = 9;
constexpr int kChDy = 10;
constexpr int kChannelsPerAnchor = 11;

/// Anchor whose prior shape best matches (by shape IoU) the given box.
int best_anchor(const GridSpec& grid, double w, double h);

/// Decodes a raw head tensor ([A*11, H, W] or [1, A*11, H, W]) into objects
/// with score = sigmoid(objectness) * max class probability >= conf_thresh.
std::vector<DetectedObject> decode(const nn::Tensor& raw, const GridSpec& grid,
                                   double conf_thresh);

/// Writes ground truth into a raw grid such that decode() recovers it:
/// box offsets inverted through the anchor transform, saturated objectness
/// and class logits, (sin, cos) angle channels, stride-normalized assoc.
/// Unassigned cells get strongly negative objectness.
nn::TensorPtr encode(const std::vector<GroundTruthObject>& objects, const GridSpec& grid);

/// Greedy per-class non-maximum suppression (descending score; ties broken by
/// input order). Returns survivors in score order.
std::vector<DetectedObject> nms(const std::vector<DetectedObject>& objects, double iou_thresh);

struct Association {
    int hand_index = -1;
    int body_index = -1;  // -1 = none
    double residual = 0.0;
};

/// Matches each hand to the body minimizing |hand_center + assoc - body_center|,
/// accepted only when the residual is within max_residual_ratio of the body box
/// diagonal. Equal residuals break toward the higher-scoring body, then the
/// lower index.
std::vector<Association> associate(const std::vector<DetectedObject>& hands,
                                   const std::vector<DetectedObject>& bodies,
                                   double max_residual_ratio);

struct PatientPartition {
    std::vector<int> patients;     // indices into the bodies list
    std::vector<int> technicians;  // complement
};

/// A body is the patient iff intersection-over-body with the bed is strictly
/// greater than the threshold.
PatientPartition filter_patient(const std::vector<DetectedObject>& bodies, const geom::BBox& bed,
                                double threshold);

/// One structured-text record per detection for golden dumps.
std::string dump_line(long frame_id, const DetectedObject& obj, int body_id);

}  // namespace okpose::detect
