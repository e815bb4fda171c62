#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include "tavaal/autodiff/ops.hpp"
#include "tavaal/autodiff/tensor.hpp"

namespace tavaal::ad {

/// SGD with classical momentum and L2 weight decay folded into the gradient.
struct SgdConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.005;
};

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::sgd_momentum;
    std::map<std::string, NdArray> first;  // momentum buffer, or Adam's m
    std::map<std::string, NdArray> second; // Adam's v
    std::uint64_t step = 0;

    static OptimizerState for_config(const OptimizerConfig& cfg) {
        OptimizerState s;
        s.kind = std::holds_alternative<AdamConfig>(cfg) ? OptimizerKind::adam : OptimizerKind::sgd_momentum;
        return s;
    }
};

namespace detail {
inline NdArray& buffer_for(std::map<std::string, NdArray>& bufs, const std::string& name, const Shape& shape) {
    auto it = bufs.find(name);
    if (it == bufs.end()) it = bufs.emplace(name, NdArray(shape)).first;
    if (it->second.shape() != shape) throw ContractViolation("optimizer: buffer shape mismatch for " + name);
    return it->second;
}
} // namespace detail

/// Applies one update to every parameter in `params` using `grads`, in place.
/// Throws TrainingError before touching anything if a gradient is non-finite.
inline void optimizer_step(ParamSet& params, const GradMap& grads, OptimizerState& state,
                           const OptimizerConfig& cfg) {
    const OptimizerKind kind =
        std::holds_alternative<AdamConfig>(cfg) ? OptimizerKind::adam : OptimizerKind::sgd_momentum;
    if (kind != state.kind) throw ContractViolation("optimizer_step: config kind does not match state");

    for (const auto& p : params) {
        auto it = grads.find(p.name);
        if (it == grads.end()) throw ContractViolation("optimizer_step: missing gradient for " + p.name);
        if (it->second.shape() != p.tensor.shape())
            throw ContractViolation("optimizer_step: gradient shape mismatch for " + p.name);
        if (!all_finite(it->second.values()))
            throw TrainingError("optimizer_step: non-finite gradient for " + p.name);
    }

    ++state.step;
    if (kind == OptimizerKind::sgd_momentum) {
        const auto& c = std::get<SgdConfig>(cfg);
        for (auto& p : params) {
            const NdArray& g = grads.at(p.name);
            NdArray& w = p.tensor.mutable_value();
            NdArray& v = detail::buffer_for(state.first, p.name, w.shape());
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double d = g[i] + c.weight_decay * w[i];
                v[i] = c.momentum * v[i] + d;
                w[i] -= c.lr * v[i];
            }
        }
    } else {
        const auto& c = std::get<AdamConfig>(cfg);
        const double t = static_cast<double>(state.step);
        const double bc1 = 1.0 - std::pow(c.beta1, t);
        const double bc2 = 1.0 - std::pow(c.beta2, t);
        for (auto& p : params) {
            const NdArray& g = grads.at(p.name);
            NdArray& w = p.tensor.mutable_value();
            NdArray& m = detail::buffer_for(state.first, p.name, w.shape());
            NdArray& v = detail::buffer_for(state.second, p.name, w.shape());
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                w[i] -= c.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.eps);
            }
        }
    }
}

} // namespace tavaal::ad
