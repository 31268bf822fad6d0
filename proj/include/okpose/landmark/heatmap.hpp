#pragma once

#include "okpose/geom/geom.hpp"
#include "okpose/nn/tensor.hpp"

namespace okpose::landmark {

constexpr int kHeatmapStride = 4;
constexpr double kHeatmapSigma = 2.0;  // in heatmap cells

/// Crop pixel -> heatmap coordinate (cell sample points at integers).
inline double to_heatmap_coord(double p) { return (p + 0.5) / kHeatmapStride - 0.5; }
inline double to_crop_coord(double h) { return (h + 0.5) * kHeatmapStride - 0.5; }

/// Renders 21 unnormalized Gaussian channels (peak exactly 1 at the keypoint)
/// with shape [21, S, S], S = crop_size / stride. Confidence-0 keypoints
/// produce an all-zero channel.
nn::TensorPtr encode_heatmap(const geom::HandLandmarks2D& lms, int crop_size,
                             double sigma = kHeatmapSigma);

/// Argmax per channel plus a 0.25-cell shift toward the larger axis neighbor,
/// mapped back to crop pixels; confidence = channel peak. All-zero channels
/// decode to the crop center with confidence 0.
geom::HandLandmarks2D decode_heatmap(const nn::Tensor& hm, int crop_size);

}  // namespace okpose::landmark
