#pragma once

#include <vector>

#include "okpose/detect/detect.hpp"
#include "okpose/nn/ops.hpp"

namespace okpose::train {

/// The detector objective, returned term by term for logging. `total` is the
/// weighted sum the optimizer minimizes:
///   1.0 * box (one minus IoU of decoded boxes at assigned cells)
/// + 1.0 * obj (objectness cross-entropy over the whole grid, positives
///              up-weighted by pos_weight)
/// + 0.5 * cls (hand-vs-body cross-entropy at assigned cells)
/// + 0.5 * angle (squared error of the orientation channels, hands only)
/// + 0.5 * assoc (squared error of the association channels, hands only)
struct DetectorLossParts {
    nn::TensorPtr total;
    nn::TensorPtr box;
    nn::TensorPtr obj;
    nn::TensorPtr cls;
    nn::TensorPtr angle;
    nn::TensorPtr assoc;
};

DetectorLossParts detector_loss(const nn::TensorPtr& raw,
                                const std::vector<detect::GroundTruthObject>& gts,
                                const detect::GridSpec& grid, double pos_weight = 8.0);

}  // namespace okpose::train
