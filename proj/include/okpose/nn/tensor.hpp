#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace okpose::nn {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense float32 array with reverse-mode autodiff.
///
/// Ops record parent links and a backward function on their outputs while
/// grad mode is enabled; backward(loss) replays the graph in reverse
/// topological order and accumulates into `grad` of every reachable tensor.
class Tensor {
public:
    std::vector<int> shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::vector<float> grad;  // sized lazily on first accumulation

    // Reductions that produce a scalar also keep their double-precision
    // accumulator here; finite-difference harnesses read it to avoid the
    // final float cast.
    double scalar_hi = 0.0;
    bool has_scalar_hi = false;

    Tensor() = default;
    Tensor(std::vector<int> shape_in, std::vector<float> data_in, bool rg = false);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr full(std::vector<int> shape, float value, bool requires_grad = false);
    static TensorPtr ones(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr scalar(float value, bool requires_grad = false);
    static TensorPtr from(std::vector<int> shape, std::vector<float> values,
                          bool requires_grad = false);

    void zero_grad();
    void accumulate_grad(const float* g, size_t n);

    // --- graph wiring, populated by ops ---
    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;  // reads this->grad, pushes to parents
    const char* op = "leaf";
    bool backward_done = false;
};

/// Reverse pass from a scalar loss. Errors: non-scalar loss, a loss with no
/// recorded graph, or a second call on the same graph.
void backward(const TensorPtr& loss);

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

/// Throws if any value is NaN/Inf; `what` names the producing op.
void ensure_finite(const Tensor& t, const char* what);

bool grad_enabled();

/// Scoped switch that disables graph recording (inference mode).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

/// Scalar value of a reduction in double precision when available.
double loss_value_hi(const Tensor& t);

}  // namespace okpose::nn
