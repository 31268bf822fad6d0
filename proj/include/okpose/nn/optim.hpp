#pragma once

#include <cstdint>
#include <vector>

#include "okpose/nn/layers.hpp"

namespace okpose::nn {

/// Adam optimizer over a fixed parameter list. Moment buffers are keyed by
/// position, so the list must not change between steps.
class Adam {
public:
    explicit Adam(std::vector<NamedParam> params, float lr = 1e-4f, float beta1 = 0.9f,
                  float beta2 = 0.999f, float eps = 1e-8f);

    /// Applies one update from the gradients currently stored on the parameters,
    /// then leaves the gradients untouched (call zero_grad separately).
    /// Throws if any gradient is missing or non-finite, naming the parameter.
    void step();

    void zero_grad();

    float lr() const { return lr_; }
    void set_lr(float lr) { lr_ = lr; }
    int64_t steps_taken() const { return t_; }
    const std::vector<NamedParam>& params() const { return params_; }

private:
    std::vector<NamedParam> params_;
    std::vector<std::vector<float>> m_, v_;
    float lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

}  // namespace okpose::nn
