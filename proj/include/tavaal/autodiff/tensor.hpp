#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tavaal/autodiff/ndarray.hpp"
#include "tavaal/error.hpp"

namespace tavaal::ad {

namespace detail {
inline thread_local int no_grad_depth = 0;
}

inline bool grad_enabled() noexcept { return detail::no_grad_depth == 0; }

/// While alive, newly built ops record no graph edges on this thread.
class NoGradGuard {
public:
    NoGradGuard() noexcept { ++detail::no_grad_depth; }
    ~NoGradGuard() { --detail::no_grad_depth; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    NdArray value;
    std::vector<double> grad; // empty until first accumulation
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward;

    /// Lazily sized gradient buffer; only valid when requires_grad.
    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

/// Handle to a value in a differentiable computation graph.
///
/// Copies share the underlying node. Leaves built with parameter() accumulate
/// gradients; constants never do. Ops derive requires_grad from their inputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    const NdArray& value() const { return node_->value; }
    NdArray& mutable_value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    std::size_t size() const { return node_->value.size(); }
    std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
    std::size_t rank() const { return node_->value.rank(); }
    double item() const {
        if (size() != 1) throw ContractViolation("item() on non-scalar tensor " + shape_str(shape()));
        return node_->value[0];
    }
    double operator[](std::size_t i) const { return node_->value[i]; }

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }

    /// Gradient as an array of the tensor's shape (zeros if none accumulated).
    NdArray grad() const {
        if (node_->grad.empty()) return NdArray(shape());
        return NdArray(shape(), node_->grad);
    }

    void zero_grad() { node_->grad.clear(); }

    const NodePtr& node() const { return node_; }
    bool defined() const { return static_cast<bool>(node_); }

private:
    NodePtr node_;
};

inline Tensor constant(NdArray value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Tensor(std::move(n));
}

inline Tensor parameter(NdArray value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Tensor(std::move(n));
}

/// Same value, cut from the graph.
inline Tensor detach(const Tensor& t) { return constant(t.value()); }

/// Builds an op result. The backward closure receives the result node; its
/// `grad` holds dL/d(result) and it must accumulate into parents that
/// require grad (use Node::grad_buffer()).
inline Tensor make_op(NdArray value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (grad_enabled()) {
        const bool any = std::any_of(inputs.begin(), inputs.end(),
                                     [](const Tensor& t) { return t.requires_grad(); });
        if (any) {
            n->requires_grad = true;
            n->parents.reserve(inputs.size());
            for (auto& t : inputs) n->parents.push_back(t.node());
            n->backward = std::move(backward);
        }
    }
    return Tensor(std::move(n));
}

/// Reverse-mode sweep from a scalar output. Gradients accumulate into every
/// participating node that requires grad.
inline void backward(const Tensor& output) {
    if (output.size() != 1)
        throw ContractViolation("backward: output must be scalar, got " + shape_str(output.shape()));
    if (!output.requires_grad()) return;

    enum class Mark { active, done };
    std::unordered_map<Node*, Mark> marks;
    std::vector<Node*> order; // post-order
    std::vector<std::pair<Node*, std::size_t>> stack{{output.node().get(), 0}};
    marks[output.node().get()] = Mark::active;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (!p->requires_grad) continue;
            auto it = marks.find(p);
            if (it == marks.end()) {
                marks[p] = Mark::active;
                stack.emplace_back(p, 0);
            } else if (it->second == Mark::active) {
                throw ContractViolation("backward: cycle detected in computation graph");
            }
        } else {
            marks[node] = Mark::done;
            order.push_back(node);
            stack.pop_back();
        }
    }

    output.node()->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
}

/// A named trainable tensor.
struct Parameter {
    std::string name;
    Tensor tensor;
};

using ParamSet = std::vector<Parameter>;
using GradMap = std::map<std::string, NdArray>;

inline ParamSet concat_params(std::initializer_list<ParamSet> sets) {
    ParamSet out;
    for (const auto& s : sets) out.insert(out.end(), s.begin(), s.end());
    return out;
}

inline ParamSet prefixed(const std::string& prefix, ParamSet set) {
    for (auto& p : set) p.name = prefix + p.name;
    return set;
}

/// Zeroes `params`, back-propagates `output`, and returns the gradient of each
/// parameter by name. Parameters outside the graph get zero gradients.
inline GradMap forward_backward(const Tensor& output, const ParamSet& params) {
    for (auto p : params) p.tensor.zero_grad();
    backward(output);
    GradMap grads;
    for (const auto& p : params) {
        auto [it, inserted] = grads.emplace(p.name, p.tensor.grad());
        if (!inserted) throw ContractViolation("forward_backward: duplicate parameter name " + p.name);
    }
    for (auto p : params) p.tensor.zero_grad();
    return grads;
}

/// Deep copy of parameter values, for snapshots and bit-identity checks.
inline std::vector<NdArray> snapshot(const ParamSet& params) {
    std::vector<NdArray> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.tensor.value());
    return out;
}

} // namespace tavaal::ad
