#pragma once

#include <cmath>

#include "tavaal/autodiff/optim.hpp"
#include "tavaal/task/ranker.hpp"
#include "tavaal/task/ranking_losses.hpp"

namespace tavaal::testing {

struct LearnabilityResult {
    double initial_accuracy = 0;
    double final_accuracy = 0;
    std::size_t steps_to_target = 0; // 0 if the target was never reached
};

/// Fraction of ordered pairs (i < j, l_i != l_j) whose predicted order agrees.
inline double pairwise_accuracy(const std::vector<double>& pred, const std::vector<double>& target) {
    std::size_t agree = 0, total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            if (target[i] == target[j]) continue;
            ++total;
            agree += (pred[i] > pred[j]) == (target[i] > target[j]);
        }
    return static_cast<double>(agree) / static_cast<double>(total);
}

/// Trains a Ranker on frozen random two-tap features (conv-like and flat)
/// with a fixed nonlinear target, minibatch 64 of 200 samples.
inline LearnabilityResult ranker_learnability(std::uint64_t seed, task::RankingKind kind, std::size_t max_steps = 500,
                                              double target_accuracy = 0.9) {
    constexpr std::size_t n = 200, batch = 64;
    Rng rng = make_rng(seed, Stream::dataset);
    ad::NdArray tap1(ad::Shape{n, 4, 3, 3}), tap2(ad::Shape{n, 6});
    for (auto& v : tap1.values()) v = std::max(0.0, std::normal_distribution<double>()(rng));
    for (auto& v : tap2.values()) v = std::max(0.0, std::normal_distribution<double>()(rng));
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        double a = 0, b = 0;
        for (std::size_t k = 0; k < 36; ++k) a += tap1[i * 36 + k];
        for (std::size_t k = 0; k < 6; ++k) b += (k % 2 ? -1.0 : 1.0) * tap2[i * 6 + k];
        target[i] = a / 36 + std::tanh(b);
    }

    Rng init = make_rng(seed, Stream::task_init);
    task::Ranker ranker({4, 6}, 16, init);
    ad::ParamSet params = ranker.params();
    auto state = ad::OptimizerState::for_config(ad::AdamConfig{});
    const ad::AdamConfig adam{1e-2};

    auto evaluate = [&] {
        ad::NoGradGuard guard;
        const auto out = ranker.forward({ad::constant(tap1), ad::constant(tap2)});
        return pairwise_accuracy({out.value().values().begin(), out.value().values().end()}, target);
    };

    LearnabilityResult res;
    res.initial_accuracy = evaluate();
    Rng shuffle_rng = make_rng(seed, Stream::task_shuffle);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t step = 1; step <= max_steps; ++step) {
        shuffle(order, shuffle_rng);
        ad::NdArray b1(ad::Shape{batch, 4, 3, 3}), b2(ad::Shape{batch, 6});
        std::vector<double> t(batch);
        for (std::size_t k = 0; k < batch; ++k) {
            std::copy_n(tap1.data() + order[k] * 36, 36, b1.data() + k * 36);
            std::copy_n(tap2.data() + order[k] * 6, 6, b2.data() + k * 6);
            t[k] = target[order[k]];
        }
        const auto pred = ranker.forward({ad::constant(b1), ad::constant(b2)});
        const auto pb = task::make_pairs(ad::constant(ad::NdArray(ad::Shape{batch}, t)), pred);
        const auto loss = kind == task::RankingKind::marginal ? task::marginal_ranking_loss(pb, 1.0)
                                                             : task::rank_bce_loss(pb);
        ad::optimizer_step(params, ad::forward_backward(loss, params), state, adam);
        if (step % 25 == 0 && !res.steps_to_target && evaluate() > target_accuracy) res.steps_to_target = step;
    }
    res.final_accuracy = evaluate();
    return res;
}

} // namespace tavaal::testing
