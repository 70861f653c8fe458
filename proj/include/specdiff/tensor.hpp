#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace specdiff {

class Tensor;

namespace detail {

struct Node {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated lazily, same size as values
    bool requires_grad = false;
    bool has_graph = false;  // produced by a recorded op and not yet consumed
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    double* grad_data();  // ensures allocation (zero-filled)
    void accumulate(std::span<const double> g);
};

}  // namespace detail

// Row-major 64-bit float tensor with reverse-mode autodiff. Value-semantics
// handle to a shared node; copies alias the same storage.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    std::int64_t size() const { return node_->size(); }
    int rank() const { return static_cast<int>(node_->shape.size()); }

    std::span<const double> values() const { return node_->values; }
    double* data() { return node_->values.data(); }
    const double* data() const { return node_->values.data(); }
    double item() const;  // value of a 1-element tensor

    bool requires_grad() const { return node_->requires_grad; }
    bool has_graph() const { return node_->has_graph; }
    std::span<const double> grad() const;  // zero-filled view if never touched
    double* grad_data() { return node_->grad_data(); }
    void zero_grad();

    // Deep copy of values only; result is a detached leaf.
    Tensor clone() const;

    std::shared_ptr<detail::Node> node() const { return node_; }

  private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;

    friend Tensor make_op(std::vector<int>, std::vector<double>, std::vector<Tensor>,
                          std::function<void(detail::Node&)>);
};

// Creates an op node. The graph edge and backward hook are recorded only
// when at least one input requires grad and recording is enabled.
Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward);

// Suppresses graph recording for its lifetime (sampling, evaluation).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

// Runs reverse-mode accumulation from a scalar loss into every reachable
// parameter's grad. The traversed graph is consumed; calling backward twice
// on the same loss is a usage error.
void backward(const Tensor& loss);

// ---- elementwise / structural ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
// Multiplies every element of sample i (leading dim) by coeff[i].
Tensor scale_per_sample(const Tensor& a, std::vector<double> coeff);
Tensor silu(const Tensor& a);  // x * sigmoid(x)

// ---- reductions ----
Tensor sum(const Tensor& a);                  // -> [1]
Tensor sum_per_sample(const Tensor& a);       // [B, ...] -> [B]
Tensor sq_sum_per_sample(const Tensor& a);    // sum of squares per sample
Tensor abs_sum_per_sample(const Tensor& a);   // L1 per sample; d|x|/dx := 0 at x = 0
Tensor mean_over_batch(const Tensor& a);      // [B] -> [1]

std::int64_t shape_size(const std::vector<int>& shape);

}  // namespace specdiff
