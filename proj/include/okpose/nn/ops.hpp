#pragma once

#include <vector>

#include "okpose/nn/tensor.hpp"

namespace okpose::nn {

// Elementwise. All require exactly matching shapes where two tensors meet;
// mismatches throw with both shapes in the message.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr hadamard(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& x, float s);
TensorPtr shift(const TensorPtr& x, float c);
TensorPtr relu(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr exp_op(const TensorPtr& x);

/// Softmax over the last dimension.
TensorPtr softmax(const TensorPtr& x);

// Shape ops (dim 1 is the channel dim for every rank >= 2 tensor).
TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b);
TensorPtr slice_channels(const TensorPtr& x, int c0, int c1);
TensorPtr reshape(const TensorPtr& x, std::vector<int> new_shape);

// Convolutional stack, NCHW layout.
// conv2d: x [N,Cin,H,W], w [Cout,Cin,kh,kw], b [Cout].
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int stride, int pad);
// conv_transpose2d: x [N,Cin,H,W], w [Cin,Cout,kh,kw], b [Cout];
// output spatial size (H-1)*stride - 2*pad + kh.
TensorPtr conv_transpose2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                           int stride, int pad);
// linear: x [N,D], w [Dout,D], b [Dout].
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
TensorPtr maxpool2d(const TensorPtr& x, int k, int stride);
TensorPtr upsample_nearest(const TensorPtr& x, int s);
// [N,C,H,W] -> [N,C]
TensorPtr global_avg_pool(const TensorPtr& x);

// Reductions (double accumulation, scalar output).
TensorPtr sum(const TensorPtr& x);
TensorPtr mean(const TensorPtr& x);
/// mean((pred - target)^2), composed from primitives.
TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target);
/// Mean of per-element weighted binary cross entropy on logits.
/// `weights` may be null (all ones). Targets/weights are constants.
TensorPtr bce_with_logits(const TensorPtr& logits, const TensorPtr& targets,
                          const TensorPtr& weights = nullptr);

// Detection-head plumbing.
struct AnchorCell {
    int n = 0;  // batch index
    int a = 0;  // anchor index
    int y = 0;  // grid row
    int x = 0;  // grid col
};

/// x [N, A*P, H, W] -> [K, P]: row k holds the P channels of anchor cell k.
TensorPtr gather_anchor_rows(const TensorPtr& x, int anchors, int ch_per_anchor,
                             const std::vector<AnchorCell>& cells);

/// x [N,C,H,W] -> [N,K,H,W] keeping the listed channels in order.
TensorPtr select_channels(const TensorPtr& x, const std::vector<int>& channels);

/// pred [P,4], target [P,4] as (l,t,r,b) -> IoU per row [P].
/// Differentiable wrt pred; target is a constant.
TensorPtr box_iou_pairs(const TensorPtr& pred, const TensorPtr& target);

}  // namespace okpose::nn
