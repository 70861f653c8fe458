#include "specdiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "specdiff/error.hpp"

namespace specdiff {

std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

namespace detail {

double* Node::grad_data() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad.data();
}

void Node::accumulate(std::span<const double> g) {
    double* dst = grad_data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace detail

static std::shared_ptr<detail::Node> new_node(std::vector<int> shape,
                                              std::vector<double> values,
                                              bool requires_grad) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    n->requires_grad = requires_grad;
    return n;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    const auto n = shape_size(shape);
    return Tensor(new_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    const auto n = shape_size(shape);
    return Tensor(new_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
        throw UsageError("Tensor::from: shape does not match value count");
    return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

double Tensor::item() const {
    if (size() != 1) throw UsageError("Tensor::item: tensor is not a scalar");
    return node_->values[0];
}

std::span<const double> Tensor::grad() const {
    const_cast<detail::Node*>(node_.get())->grad_data();
    return node_->grad;
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    return from(node_->shape, node_->values);
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward_fn) {
    bool needs = false;
    if (g_grad_enabled)
        for (const auto& t : inputs)
            needs = needs || t.requires_grad();
    auto n = new_node(std::move(shape), std::move(values), needs);
    if (needs) {
        n->has_graph = true;
        n->parents.reserve(inputs.size());
        for (const auto& t : inputs) n->parents.push_back(t.node());
        n->backward = std::move(backward_fn);
    }
    return Tensor(n);
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw UsageError("backward: loss must be a 1-element tensor");
    auto root = loss.node();
    if (!root->has_graph)
        throw UsageError("backward: tensor is detached (no recorded graph, or already consumed)");

    // Post-order DFS; reverse gives a valid topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* p = node->parents[next++].get();
            if (p->has_graph && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad_data();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* node = *it;
        if (node->backward) node->backward(*node);
    }
    // Consume the graph; parameter grads persist on their leaf nodes.
    for (detail::Node* node : order) {
        node->parents.clear();
        node->backward = nullptr;
        node->has_graph = false;
    }
}

static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw UsageError(std::string(op) + ": shape mismatch");
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] + pb[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
        if (self.parents[1]->requires_grad) self.parents[1]->accumulate(self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] - pb[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
        if (self.parents[1]->requires_grad) {
            double* g = self.parents[1]->grad_data();
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] * pb[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        const auto& va = self.parents[0]->values;
        const auto& vb = self.parents[1]->values;
        if (self.parents[0]->requires_grad) {
            double* g = self.parents[0]->grad_data();
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * vb[i];
        }
        if (self.parents[1]->requires_grad) {
            double* g = self.parents[1]->grad_data();
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * va[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    const double* pa = a.data();
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] * c;
    return make_op(a.shape(), std::move(out), {a}, [c](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        double* g = self.parents[0]->grad_data();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * c;
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    const double* pa = a.data();
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = pa[i] + c;
    return make_op(a.shape(), std::move(out), {a}, [](detail::Node& self) {
        if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    });
}

Tensor scale_per_sample(const Tensor& a, std::vector<double> coeff) {
    if (a.rank() < 1 || a.shape()[0] != static_cast<int>(coeff.size()))
        throw UsageError("scale_per_sample: coefficient count must match leading dimension");
    const std::int64_t batch = a.shape()[0];
    const std::int64_t per = a.size() / batch;
    std::vector<double> out(a.size());
    const double* pa = a.data();
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < per; ++i) out[b * per + i] = pa[b * per + i] * coeff[b];
    return make_op(a.shape(), std::move(out), {a},
                   [coeff = std::move(coeff), per](detail::Node& self) {
                       if (!self.parents[0]->requires_grad) return;
                       double* g = self.parents[0]->grad_data();
                       for (std::size_t b = 0; b < coeff.size(); ++b)
                           for (std::int64_t i = 0; i < per; ++i)
                               g[b * per + i] += self.grad[b * per + i] * coeff[b];
                   });
}

Tensor silu(const Tensor& a) {
    std::vector<double> out(a.size());
    const double* pa = a.data();
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-pa[i]));
        out[i] = pa[i] * s;
    }
    return make_op(a.shape(), std::move(out), {a}, [](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        const auto& x = self.parents[0]->values;
        double* g = self.parents[0]->grad_data();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-x[i]));
            g[i] += self.grad[i] * s * (1.0 + x[i] * (1.0 - s));
        }
    });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    const double* pa = a.data();
    for (std::int64_t i = 0; i < a.size(); ++i) total += pa[i];
    return make_op({1}, {total}, {a}, [](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        double* g = self.parents[0]->grad_data();
        const double go = self.grad[0];
        for (std::size_t i = 0; i < self.parents[0]->values.size(); ++i) g[i] += go;
    });
}

static std::pair<std::int64_t, std::int64_t> batch_layout(const Tensor& a, const char* op) {
    if (a.rank() < 1) throw UsageError(std::string(op) + ": tensor has no batch dimension");
    const std::int64_t batch = a.shape()[0];
    return {batch, a.size() / batch};
}

Tensor sum_per_sample(const Tensor& a) {
    auto [batch, per] = batch_layout(a, "sum_per_sample");
    std::vector<double> out(batch, 0.0);
    const double* pa = a.data();
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < per; ++i) out[b] += pa[b * per + i];
    return make_op({static_cast<int>(batch)}, std::move(out), {a}, [per](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        double* g = self.parents[0]->grad_data();
        for (std::size_t b = 0; b < self.grad.size(); ++b)
            for (std::int64_t i = 0; i < per; ++i) g[b * per + i] += self.grad[b];
    });
}

Tensor sq_sum_per_sample(const Tensor& a) {
    auto [batch, per] = batch_layout(a, "sq_sum_per_sample");
    std::vector<double> out(batch, 0.0);
    const double* pa = a.data();
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < per; ++i) out[b] += pa[b * per + i] * pa[b * per + i];
    return make_op({static_cast<int>(batch)}, std::move(out), {a}, [per](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        const auto& x = self.parents[0]->values;
        double* g = self.parents[0]->grad_data();
        for (std::size_t b = 0; b < self.grad.size(); ++b)
            for (std::int64_t i = 0; i < per; ++i)
                g[b * per + i] += self.grad[b] * 2.0 * x[b * per + i];
    });
}

Tensor abs_sum_per_sample(const Tensor& a) {
    auto [batch, per] = batch_layout(a, "abs_sum_per_sample");
    std::vector<double> out(batch, 0.0);
    const double* pa = a.data();
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < per; ++i) out[b] += std::abs(pa[b * per + i]);
    return make_op({static_cast<int>(batch)}, std::move(out), {a}, [per](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        const auto& x = self.parents[0]->values;
        double* g = self.parents[0]->grad_data();
        for (std::size_t b = 0; b < self.grad.size(); ++b)
            for (std::int64_t i = 0; i < per; ++i) {
                const double v = x[b * per + i];
                const double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                g[b * per + i] += self.grad[b] * s;
            }
    });
}

Tensor mean_over_batch(const Tensor& a) {
    if (a.rank() != 1) throw UsageError("mean_over_batch: expected a rank-1 tensor");
    const std::int64_t batch = a.shape()[0];
    double total = 0.0;
    const double* pa = a.data();
    for (std::int64_t b = 0; b < batch; ++b) total += pa[b];
    return make_op({1}, {total / static_cast<double>(batch)}, {a}, [batch](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        double* g = self.parents[0]->grad_data();
        const double go = self.grad[0] / static_cast<double>(batch);
        for (std::int64_t b = 0; b < batch; ++b) g[b] += go;
    });
}

}  // namespace specdiff
