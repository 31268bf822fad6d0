#pragma once

#include <string>
#include <vector>

#include "okpose/nn/ops.hpp"
#include "okpose/nn/rng.hpp"
#include "okpose/nn/tensor.hpp"

namespace okpose::nn {

/// A learnable tensor with a stable name used for checkpoints and optimizer state.
struct NamedParam {
    std::string name;
    TensorPtr tensor;
};

/// Fills `t` with Kaiming-uniform values: U(-bound, bound), bound = sqrt(6 / fan_in).
void kaiming_uniform_(Tensor& t, int fan_in, Rng& rng);

struct Conv2d {
    TensorPtr weight;  // [Cout, Cin, k, k]
    TensorPtr bias;    // [Cout]
    int stride = 1;
    int pad = 0;

    Conv2d() = default;
    Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng);
    TensorPtr operator()(const TensorPtr& x) const { return conv2d(x, weight, bias, stride, pad); }
    void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct ConvTranspose2d {
    TensorPtr weight;  // [Cin, Cout, k, k]
    TensorPtr bias;    // [Cout]
    int stride = 1;
    int pad = 0;

    ConvTranspose2d() = default;
    ConvTranspose2d(int cin, int cout, int k, int stride, int pad, Rng& rng);
    TensorPtr operator()(const TensorPtr& x) const {
        return conv_transpose2d(x, weight, bias, stride, pad);
    }
    void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct Linear {
    TensorPtr weight;  // [Dout, Din]
    TensorPtr bias;    // [Dout]

    Linear() = default;
    Linear(int din, int dout, Rng& rng);
    TensorPtr operator()(const TensorPtr& x) const { return linear(x, weight, bias); }
    void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

}  // namespace okpose::nn
