#include "okpose/nn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace okpose::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (const int d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<int> shape_in, std::vector<float> data_in, bool rg)
    : shape(std::move(shape_in)), data(std::move(data_in)), requires_grad(rg) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not match " +
                                    std::to_string(data.size()) + " values");
    }
    for (const int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim in " + shape_str(shape));
    }
}

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0f, requires_grad);
}

TensorPtr Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
    const auto n = static_cast<size_t>(shape_numel(shape));
    return std::make_shared<Tensor>(std::move(shape), std::vector<float>(n, value), requires_grad);
}

TensorPtr Tensor::ones(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 1.0f, requires_grad);
}

TensorPtr Tensor::scalar(float value, bool requires_grad) {
    return std::make_shared<Tensor>(std::vector<int>{1}, std::vector<float>{value}, requires_grad);
}

TensorPtr Tensor::from(std::vector<int> shape, std::vector<float> values, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(values), requires_grad);
}

void Tensor::zero_grad() {
    grad.assign(data.size(), 0.0f);
}

void Tensor::accumulate_grad(const float* g, size_t n) {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
    for (size_t i = 0; i < n; ++i) grad[i] += g[i];
}

void ensure_finite(const Tensor& t, const char* what) {
    for (const float v : t.data) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string(what) +
                                     ": non-finite value in output tensor " + shape_str(t.shape));
        }
    }
}

double loss_value_hi(const Tensor& t) {
    return t.has_scalar_hi ? t.scalar_hi : static_cast<double>(t.data.at(0));
}

void backward(const TensorPtr& loss) {
    if (!loss) throw std::invalid_argument("backward: null loss");
    if (loss->numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(loss->shape));
    }
    if (!loss->backward_fn) {
        throw std::runtime_error("backward: loss has no recorded graph (detached tensor)");
    }
    if (loss->backward_done) {
        throw std::runtime_error(
            "backward: graph already consumed; run a new forward pass first");
    }

    // Post-order DFS; reversing it yields a valid reverse-topological order.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    std::vector<std::pair<Tensor*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Tensor* child = node->parents[next_child].get();
            ++next_child;
            if (seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->grad.assign(1, 1.0f);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (!node->backward_fn) continue;
        if (node->grad.size() != node->data.size()) continue;  // no grad reached this node
        node->backward_fn(*node);
    }
    loss->backward_done = true;
}

}  // namespace okpose::nn
