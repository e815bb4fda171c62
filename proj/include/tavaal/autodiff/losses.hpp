#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tavaal/autodiff/ops.hpp"

namespace tavaal::ad {

/// Row-wise softmax of a [B x C] array, max-subtracted.
inline NdArray softmax_rows(const NdArray& logits) {
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    NdArray p(logits.shape());
    for (std::size_t r = 0; r < B; ++r) {
        const double* row = logits.data() + r * C;
        const double m = *std::max_element(row, row + C);
        double z = 0;
        for (std::size_t c = 0; c < C; ++c) z += (p[r * C + c] = std::exp(row[c] - m));
        for (std::size_t c = 0; c < C; ++c) p[r * C + c] /= z;
    }
    return p;
}

/// -log softmax(logits)[label] for each row; result shape [B].
inline Tensor per_sample_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    detail::require_rank(logits, 2, "cross_entropy");
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    if (C < 2) throw InputError("cross_entropy: need at least 2 classes");
    if (labels.size() != B) throw InputError("cross_entropy: label count does not match batch");
    std::vector<int> y(labels.begin(), labels.end());
    for (int l : y)
        if (l < 0 || static_cast<std::size_t>(l) >= C)
            throw InputError("cross_entropy: label " + std::to_string(l) + " outside [0, " + std::to_string(C) + ")");

    NdArray out(Shape{B});
    for (std::size_t r = 0; r < B; ++r) {
        const double* row = logits.value().data() + r * C;
        const double m = *std::max_element(row, row + C);
        double z = 0;
        for (std::size_t c = 0; c < C; ++c) z += std::exp(row[c] - m);
        out[r] = (m + std::log(z)) - row[y[r]];
    }
    return make_op(std::move(out), {logits}, [B, C, y = std::move(y)](Node& self) {
        Node& p = *self.parents[0];
        const NdArray prob = softmax_rows(p.value);
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < C; ++c)
                g[r * C + c] += self.grad[r] * (prob[r * C + c] - (static_cast<int>(c) == y[r] ? 1.0 : 0.0));
    });
}

/// Mean over the batch of the cross-entropy between softmax(logits) and labels.
inline Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    return mean(per_sample_cross_entropy(logits, labels));
}

/// KL(N(mu, exp(logvar)) || N(0, I)), summed over latent dims, averaged over the batch.
inline Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& logvar) {
    detail::require_rank(mu, 2, "kl_diag_gaussian");
    detail::require_same_shape(mu, logvar, "kl_diag_gaussian");
    const double B = static_cast<double>(mu.dim(0));
    double s = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu[i], lv = logvar[i];
        // expm1(lv) - lv is exp(lv) - 1 - lv without cancellation near 0.
        s += m * m + (std::expm1(lv) - lv);
    }
    return make_op(NdArray::scalar(0.5 * s / B), {mu, logvar}, [B](Node& self) {
        Node& pm = *self.parents[0];
        Node& pl = *self.parents[1];
        const double k = self.grad[0] / B;
        if (pm.requires_grad) {
            auto& g = pm.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * pm.value[i];
        }
        if (pl.requires_grad) {
            auto& g = pl.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += 0.5 * k * std::expm1(pl.value[i]);
        }
    });
}

/// z = mu + exp(logvar / 2) * noise. `noise` is treated as a constant.
inline Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const NdArray& noise) {
    detail::require_same_shape(mu, logvar, "reparameterize");
    if (noise.shape() != mu.shape()) throw InputError("reparameterize: noise shape mismatch");
    NdArray out(mu.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu[i] + std::exp(0.5 * logvar[i]) * noise[i];
    return make_op(std::move(out), {mu, logvar}, [noise](Node& self) {
        Node& pm = *self.parents[0];
        Node& pl = *self.parents[1];
        if (pm.requires_grad) {
            auto& g = pm.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pl.requires_grad) {
            auto& g = pl.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += self.grad[i] * 0.5 * std::exp(0.5 * pl.value[i]) * noise[i];
        }
    });
}

} // namespace tavaal::ad
