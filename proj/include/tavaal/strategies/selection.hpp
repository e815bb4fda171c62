#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tavaal/adversary/cvae.hpp"
#include "tavaal/data/dataset.hpp"
#include "tavaal/error.hpp"
#include "tavaal/random.hpp"
#include "tavaal/task/ranker.hpp"
#include "tavaal/task/task_net.hpp"

namespace tavaal::strategies {

enum class StrategyKind { random, learning_loss, learning_loss_v2, vaal, ta_vaal };

inline std::string to_string(StrategyKind k) {
    switch (k) {
    case StrategyKind::random: return "random";
    case StrategyKind::learning_loss: return "learning-loss";
    case StrategyKind::learning_loss_v2: return "learning-loss-v2";
    case StrategyKind::vaal: return "vaal";
    case StrategyKind::ta_vaal: return "ta-vaal";
    }
    return "?";
}

inline StrategyKind parse_strategy(const std::string& s) {
    for (auto k : {StrategyKind::random, StrategyKind::learning_loss, StrategyKind::learning_loss_v2,
                   StrategyKind::vaal, StrategyKind::ta_vaal})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown strategy '" + s + "'");
}

/// Strategies that train a loss-prediction head next to the task learner.
inline bool uses_ranker(StrategyKind k) {
    return k == StrategyKind::learning_loss || k == StrategyKind::learning_loss_v2 || k == StrategyKind::ta_vaal;
}

inline bool uses_adversary(StrategyKind k) { return k == StrategyKind::vaal || k == StrategyKind::ta_vaal; }

struct StrategyConfig {
    StrategyKind kind = StrategyKind::ta_vaal;
    std::size_t budget = 1000;
    std::size_t subset_factor = 10;
};

struct SelectionResult {
    std::vector<std::size_t> chosen;     // dataset indices, in selection order
    std::vector<std::size_t> candidates; // dataset indices that were scored
    std::vector<double> scores;          // aligned with candidates (empty for random)
    StrategyKind kind = StrategyKind::random;
    std::size_t stage = 0;
};

/// Uniform sample of min(m, |unlabeled|) indices without replacement, sorted.
inline std::vector<std::size_t> subset_sample(std::span<const std::size_t> unlabeled, std::size_t m, Rng& rng) {
    std::vector<std::size_t> pool(unlabeled.begin(), unlabeled.end());
    if (m >= pool.size()) return pool;
    // Partial Fisher-Yates: the first m slots end up a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

namespace detail {
inline void check_budget(std::size_t b, std::size_t n) {
    if (b > n)
        throw InputError("selection: budget " + std::to_string(b) + " exceeds " + std::to_string(n) + " candidates");
}

/// Positions of the b best candidates under `better`, ties by ascending dataset index.
template <class Better>
std::vector<std::size_t> best_b(std::span<const std::size_t> candidates, std::span<const double> scores,
                                std::size_t b, Better better) {
    if (scores.size() != candidates.size()) throw InputError("selection: one score per candidate required");
    check_budget(b, candidates.size());
    std::vector<std::size_t> pos(candidates.size());
    std::iota(pos.begin(), pos.end(), 0);
    std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(b), pos.end(),
                      [&](std::size_t a, std::size_t c) {
                          if (scores[a] != scores[c]) return better(scores[a], scores[c]);
                          return candidates[a] < candidates[c];
                      });
    std::vector<std::size_t> chosen;
    chosen.reserve(b);
    for (std::size_t k = 0; k < b; ++k) chosen.push_back(candidates[pos[k]]);
    return chosen;
}
} // namespace detail

/// The b candidates with the largest scores.
inline std::vector<std::size_t> top_b(std::span<const std::size_t> candidates, std::span<const double> scores,
                                      std::size_t b) {
    return detail::best_b(candidates, scores, b, [](double x, double y) { return x > y; });
}

/// The b candidates with the smallest scores.
inline std::vector<std::size_t> bottom_b(std::span<const std::size_t> candidates, std::span<const double> scores,
                                         std::size_t b) {
    return detail::best_b(candidates, scores, b, [](double x, double y) { return x < y; });
}

inline SelectionResult select_random(std::span<const std::size_t> candidates, std::size_t b, Rng& rng) {
    detail::check_budget(b, candidates.size());
    SelectionResult out;
    out.kind = StrategyKind::random;
    out.candidates.assign(candidates.begin(), candidates.end());
    std::vector<std::size_t> pool = out.candidates;
    for (std::size_t i = 0; i < b; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
    out.chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(b));
    return out;
}

/// Ranker outputs for the given samples, evaluated in batches without a graph.
inline std::vector<double> predicted_losses(const task::TaskNet& net, const task::Ranker& ranker,
                                            const data::Dataset& ds, std::span<const std::size_t> indices,
                                            std::size_t batch = 256) {
    ad::NoGradGuard guard;
    std::vector<double> out;
    out.reserve(indices.size());
    for (std::size_t at = 0; at < indices.size(); at += batch) {
        const auto part = indices.subspan(at, std::min(batch, indices.size() - at));
        const auto fwd = net.forward(ad::constant(data::gather_batch(ds, part)));
        const auto pred = ranker.forward(fwd.features);
        out.insert(out.end(), pred.value().values().begin(), pred.value().values().end());
    }
    return out;
}

/// Encoder means for the given samples, [n x d].
inline ad::NdArray encoder_means(const adversary::CondVAE& vae, const data::Dataset& ds,
                                 std::span<const std::size_t> indices, std::size_t batch = 256) {
    ad::NoGradGuard guard;
    ad::NdArray out(ad::Shape{indices.size(), vae.latent_dim()});
    for (std::size_t at = 0; at < indices.size(); at += batch) {
        const auto part = indices.subspan(at, std::min(batch, indices.size() - at));
        const auto enc = vae.encode(ad::constant(data::gather_batch(ds, part)));
        std::copy(enc.mu.value().values().begin(), enc.mu.value().values().end(), out.data() + at * vae.latent_dim());
    }
    return out;
}

/// D(r, mu) for each candidate. Ranks (when the discriminator is conditioned)
/// are normalised over the whole candidate set.
inline std::vector<double> discriminator_scores(const adversary::CondVAE& vae,
                                                const adversary::Discriminator& disc,
                                                const std::optional<std::vector<double>>& candidate_predicted_losses,
                                                const data::Dataset& ds, std::span<const std::size_t> candidates) {
    ad::NoGradGuard guard;
    adversary::RankVariable r;
    if (disc.config().rank_conditioned) {
        if (!candidate_predicted_losses || candidate_predicted_losses->size() != candidates.size())
            throw ConfigError("discriminator_scores: rank-conditioned discriminator needs one predicted loss per candidate");
        r = adversary::normalize_ranks(*candidate_predicted_losses);
    }
    const ad::NdArray mu = encoder_means(vae, ds, candidates);
    const auto probs = disc.probability(r, ad::constant(mu));
    return {probs.value().values().begin(), probs.value().values().end()};
}

inline SelectionResult select_by_predicted_loss(std::span<const std::size_t> candidates, std::size_t b,
                                                const task::TaskNet& net, const task::Ranker& ranker,
                                                const data::Dataset& ds) {
    detail::check_budget(b, candidates.size());
    SelectionResult out;
    out.kind = StrategyKind::learning_loss;
    out.candidates.assign(candidates.begin(), candidates.end());
    out.scores = predicted_losses(net, ranker, ds, candidates);
    out.chosen = top_b(out.candidates, out.scores, b);
    return out;
}

struct RankSource {
    const task::TaskNet* net = nullptr;
    const task::Ranker* ranker = nullptr;
};

/// Bottom-b by discriminator output: the candidates that look least like the
/// labeled pool. `ranking` supplies predicted losses for rank conditioning
/// and is ignored by an unconditioned (VAAL) discriminator.
inline SelectionResult select_by_discriminator(std::span<const std::size_t> candidates, std::size_t b,
                                               const adversary::CondVAE& vae, std::optional<RankSource> ranking,
                                               const adversary::Discriminator& disc, const data::Dataset& ds) {
    detail::check_budget(b, candidates.size());
    SelectionResult out;
    out.kind = disc.config().rank_conditioned ? StrategyKind::ta_vaal : StrategyKind::vaal;
    out.candidates.assign(candidates.begin(), candidates.end());
    std::optional<std::vector<double>> pred;
    if (disc.config().rank_conditioned) {
        if (!ranking || !ranking->net || !ranking->ranker)
            throw ConfigError("select_by_discriminator: rank-conditioned discriminator needs a ranker");
        pred = predicted_losses(*ranking->net, *ranking->ranker, ds, candidates);
    }
    out.scores = discriminator_scores(vae, disc, pred, ds, candidates);
    out.chosen = bottom_b(out.candidates, out.scores, b);
    return out;
}

} // namespace tavaal::strategies
