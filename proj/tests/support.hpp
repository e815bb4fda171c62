#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tavaal/autodiff/ops.hpp"
#include "tavaal/random.hpp"

namespace tavaal::testing {

using ad::NdArray;
using ad::Shape;
using ad::Tensor;

inline NdArray random_array(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    NdArray a(shape);
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& v : a.values()) v = d(rng);
    return a;
}

/// Scalar probe sum(f(x) * w) so that vector-valued ops can be checked.
inline Tensor probe(const Tensor& y, const NdArray& w) { return ad::sum(ad::mul(y, ad::constant(w))); }

/// Error relative to the larger magnitude, floored so that gradients near
/// zero are compared absolutely.
inline double rel_error(double a, double b, double floor = 1e-2) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradCheck {
    double worst = 0;
    std::size_t checked = 0;
};

/// Central differences (step h) on up to `coords` random coordinates of
/// each input, against the reverse-mode gradient of f.
inline GradCheck check_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                 const std::vector<NdArray>& inputs, Rng& rng, std::size_t coords = 12,
                                 double h = 1e-5) {
    std::vector<Tensor> params;
    for (const auto& a : inputs) params.push_back(ad::parameter(a));
    const Tensor out = f(params);
    ad::backward(out);

    GradCheck result;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const NdArray analytic = params[p].grad();
        std::vector<std::size_t> picks;
        const std::size_t n = inputs[p].size();
        if (n <= coords) {
            for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
        } else {
            for (std::size_t k = 0; k < coords; ++k) picks.push_back(uniform_index(rng, n));
        }
        for (std::size_t i : picks) {
            auto eval = [&](double delta) {
                std::vector<Tensor> shifted;
                for (std::size_t q = 0; q < inputs.size(); ++q) {
                    NdArray a = inputs[q];
                    if (q == p) a[i] += delta;
                    shifted.push_back(ad::constant(a));
                }
                ad::NoGradGuard guard;
                return f(shifted).item();
            };
            const double numeric = (eval(h) - eval(-h)) / (2 * h);
            result.worst = std::max(result.worst, rel_error(analytic[i], numeric));
            ++result.checked;
        }
    }
    return result;
}

/// Moves biases off their zero init so random points avoid ReLU kinks at 0.
inline void randomize_biases(const ad::ParamSet& params, Rng& rng) {
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (auto p : params)
        if (p.name.ends_with(".bias"))
            for (auto& v : p.tensor.mutable_value().values()) v = d(rng);
}

/// Same check against a network's own parameters, perturbed in place.
inline GradCheck check_param_gradients(const std::function<Tensor()>& loss, const ad::ParamSet& params, Rng& rng,
                                       std::size_t coords_per_param = 4, double h = 1e-5) {
    const auto grads = ad::forward_backward(loss(), params);
    GradCheck result;
    for (auto p : params) {
        NdArray& v = p.tensor.mutable_value();
        const NdArray& analytic = grads.at(p.name);
        for (std::size_t k = 0; k < std::min(coords_per_param, v.size()); ++k) {
            const std::size_t i = uniform_index(rng, v.size());
            const double keep = v[i];
            ad::NoGradGuard guard;
            v[i] = keep + h;
            const double up = loss().item();
            v[i] = keep - h;
            const double down = loss().item();
            v[i] = keep;
            result.worst = std::max(result.worst, rel_error(analytic[i], (up - down) / (2 * h)));
            ++result.checked;
        }
    }
    return result;
}

} // namespace tavaal::testing
