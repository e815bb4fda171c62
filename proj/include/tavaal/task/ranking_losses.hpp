#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "tavaal/autodiff/losses.hpp"
#include "tavaal/error.hpp"

namespace tavaal::task {

using ad::Tensor;

/// Disjoint consecutive pairs over a batch plus the detached target losses.
struct PairBatch {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    Tensor predicted;            // [B], stays in the graph
    std::vector<double> targets; // [B], constants
    std::size_t batch_size = 0;
};

/// Pairs (0,1), (2,3), ...; an odd trailing sample is left out.
inline PairBatch make_pairs(const Tensor& per_sample_losses, const Tensor& predicted) {
    const std::size_t B = predicted.size();
    if (per_sample_losses.size() != B) throw InputError("make_pairs: loss and prediction lengths differ");
    if (B < 2) throw InputError("make_pairs: need at least 2 samples");
    PairBatch out;
    out.batch_size = B;
    out.predicted = predicted;
    out.targets.assign(per_sample_losses.value().values().begin(), per_sample_losses.value().values().end());
    for (std::size_t i = 0; i + 1 < B; i += 2) out.pairs.emplace_back(i, i + 1);
    return out;
}

namespace detail {

/// mean over pairs of phi(d, target_i > target_j) where d = pred_i - pred_j.
/// `phi` returns (value, d phi / d d).
template <class Phi>
Tensor pairwise_loss(const PairBatch& pb, Phi phi) {
    if (pb.pairs.empty()) throw InputError("ranking loss: empty pair batch");
    const double P = static_cast<double>(pb.pairs.size());
    std::vector<double> slope(pb.pairs.size());
    double total = 0;
    for (std::size_t k = 0; k < pb.pairs.size(); ++k) {
        const auto [i, j] = pb.pairs[k];
        const double d = pb.predicted[i] - pb.predicted[j];
        const auto [v, dv] = phi(d, pb.targets[i] > pb.targets[j]);
        total += v;
        slope[k] = dv;
    }
    return ad::make_op(ad::NdArray::scalar(total / P), {pb.predicted},
                       [pairs = pb.pairs, slope = std::move(slope), P](ad::Node& self) {
                           auto& g = self.parents[0]->grad_buffer();
                           const double k0 = self.grad[0] / P;
                           for (std::size_t k = 0; k < pairs.size(); ++k) {
                               g[pairs[k].first] += k0 * slope[k];
                               g[pairs[k].second] -= k0 * slope[k];
                           }
                       });
}

} // namespace detail

/// Sign-corrected learning-loss hinge: mean_pairs max(0, -I (l̂_i - l̂_j) + eps),
/// I = +1 when l_i > l_j, else -1.
inline Tensor marginal_ranking_loss(const PairBatch& pb, double epsilon = 1.0) {
    if (!(epsilon > 0)) throw InputError("marginal_ranking_loss: epsilon must be positive");
    return detail::pairwise_loss(pb, [epsilon](double d, bool first_larger) {
        const double sign = first_larger ? 1.0 : -1.0;
        const double h = -sign * d + epsilon;
        return h > 0 ? std::pair{h, -sign} : std::pair{0.0, 0.0};
    });
}

/// Sigmoid cross-entropy on predicted-loss differences:
/// mean_pairs -[I log sig(d) + (1 - I) log(1 - sig(d))], I = 1 when l_i > l_j.
inline Tensor rank_bce_loss(const PairBatch& pb) {
    return detail::pairwise_loss(pb, [](double d, bool first_larger) {
        const double I = first_larger ? 1.0 : 0.0;
        // softplus(d) - I d, written to stay exact when the ranking is saturated.
        const double v = first_larger ? ad::detail::softplus(-d) : ad::detail::softplus(d);
        return std::pair{v, ad::detail::sigmoid(d) - I};
    });
}

enum class RankingKind { marginal, rank_bce };

/// Task cross-entropy plus eta times the chosen ranking loss.
inline Tensor combined_task_loss(const Tensor& logits, std::span<const int> labels, const PairBatch& pb, double eta,
                                 RankingKind kind, double epsilon = 1.0) {
    if (eta < 0) throw InputError("combined_task_loss: eta must be non-negative");
    Tensor task = ad::softmax_cross_entropy(logits, labels);
    if (eta == 0) return task;
    Tensor rank = kind == RankingKind::marginal ? marginal_ranking_loss(pb, epsilon) : rank_bce_loss(pb);
    return ad::add(task, ad::scale(rank, eta));
}

} // namespace tavaal::task
