#include <gtest/gtest.h>

#include <cmath>

#include "learnability.hpp"
#include "support.hpp"
#include "tavaal/task/ranking_losses.hpp"
#include "tavaal/task/task_net.hpp"

using namespace tavaal;
using namespace tavaal::testing;
using ad::NdArray;
using ad::Shape;
using ad::Tensor;

namespace {

Tensor vec(const std::vector<double>& v) { return ad::constant(NdArray(Shape{v.size()}, v)); }

task::PairBatch pairs_of(const std::vector<double>& targets, const std::vector<double>& pred) {
    return task::make_pairs(vec(targets), vec(pred));
}

// Direct per-pair evaluations scaled by 2/B (B even).
double direct_hinge(const std::vector<double>& l, const std::vector<double>& p, double eps) {
    long double s = 0;
    for (std::size_t i = 0; i + 1 < l.size(); i += 2) {
        const double I = l[i] > l[i + 1] ? 1.0 : -1.0;
        s += std::max(0.0L, -static_cast<long double>(I) * (p[i] - p[i + 1]) + eps);
    }
    return static_cast<double>(2 * s / l.size());
}

double direct_bce(const std::vector<double>& l, const std::vector<double>& p) {
    long double s = 0;
    for (std::size_t i = 0; i + 1 < l.size(); i += 2) {
        const long double I = l[i] > l[i + 1] ? 1 : 0;
        const long double sig = 1 / (1 + std::exp(-static_cast<long double>(p[i] - p[i + 1])));
        s += -(I * std::log(sig) + (1 - I) * std::log(1 - sig));
    }
    return static_cast<double>(2 * s / l.size());
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -2, double hi = 2) {
    return random_array({n}, rng, lo, hi).storage();
}

} // namespace

TEST(MakePairs, EvenBatch) {
    const auto pb = pairs_of({1, 2, 3, 4}, {0, 0, 0, 0});
    ASSERT_EQ(pb.pairs.size(), 2u);
    EXPECT_EQ(pb.pairs[0], (std::pair<std::size_t, std::size_t>{0, 1}));
    EXPECT_EQ(pb.pairs[1], (std::pair<std::size_t, std::size_t>{2, 3}));
}

TEST(MakePairs, OddBatchDropsLast) {
    const auto pb = pairs_of({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    ASSERT_EQ(pb.pairs.size(), 2u);
    for (const auto& [i, j] : pb.pairs) {
        EXPECT_NE(i, 4u);
        EXPECT_NE(j, 4u);
    }
}

TEST(MakePairs, MinimalAndErrors) {
    EXPECT_EQ(pairs_of({1, 2}, {0, 0}).pairs.size(), 1u);
    EXPECT_THROW(pairs_of({1}, {0}), InputError);
    EXPECT_THROW(pairs_of({1, 2, 3}, {0, 0}), InputError);
}

TEST(MarginalRankingLoss, HingeBoundary) {
    EXPECT_DOUBLE_EQ(task::marginal_ranking_loss(pairs_of({2, 1}, {1.5, 0.5}), 1.0).item(), 0.0);
}

TEST(MarginalRankingLoss, HingeAtMargin) {
    EXPECT_DOUBLE_EQ(task::marginal_ranking_loss(pairs_of({2, 1}, {0.3, 0.3}), 1.0).item(), 1.0);
    EXPECT_DOUBLE_EQ(task::marginal_ranking_loss(pairs_of({1, 2}, {0.3, 0.3}), 1.0).item(), 1.0);
}

TEST(MarginalRankingLoss, MatchesDirectFormula) {
    Rng rng = make_rng(1, Stream::dataset);
    for (int t = 0; t < 50; ++t) {
        const auto l = random_vec(16, rng), p = random_vec(16, rng);
        const double eps = 0.1 + uniform01(rng);
        EXPECT_NEAR(task::marginal_ranking_loss(pairs_of(l, p), eps).item(), direct_hinge(l, p, eps), 1e-10);
    }
}

TEST(MarginalRankingLoss, NonPositiveEpsilonRejected) {
    EXPECT_THROW(task::marginal_ranking_loss(pairs_of({1, 2}, {0, 0}), 0.0), InputError);
}

TEST(RankBceLoss, EqualPredictionsGiveLn2) {
    EXPECT_NEAR(task::rank_bce_loss(pairs_of({2, 1}, {0.7, 0.7})).item(), std::log(2.0), 1e-15);
    EXPECT_NEAR(task::rank_bce_loss(pairs_of({1, 2}, {0.7, 0.7})).item(), std::log(2.0), 1e-15);
}

TEST(RankBceLoss, SaturatedCorrectRanking) {
    EXPECT_LT(task::rank_bce_loss(pairs_of({2, 1}, {50, 0})).item(), 1e-10);
    EXPECT_TRUE(std::isfinite(task::rank_bce_loss(pairs_of({1, 2}, {800, 0})).item()));
}

TEST(RankBceLoss, MatchesDirectFormula) {
    Rng rng = make_rng(2, Stream::dataset);
    for (int t = 0; t < 50; ++t) {
        const auto l = random_vec(16, rng), p = random_vec(16, rng, -5, 5);
        EXPECT_NEAR(task::rank_bce_loss(pairs_of(l, p)).item(), direct_bce(l, p), 1e-9);
    }
}

TEST(RankingLosses, PairSymmetry) {
    Rng rng = make_rng(3, Stream::dataset);
    for (int t = 0; t < 20; ++t) {
        const auto l = random_vec(2, rng), p = random_vec(2, rng);
        const std::vector<double> ls{l[1], l[0]}, ps{p[1], p[0]};
        EXPECT_NEAR(task::rank_bce_loss(pairs_of(l, p)).item(), task::rank_bce_loss(pairs_of(ls, ps)).item(), 1e-15);
        EXPECT_NEAR(task::marginal_ranking_loss(pairs_of(l, p)).item(),
                    task::marginal_ranking_loss(pairs_of(ls, ps)).item(), 1e-15);
    }
}

TEST(RankingLosses, ShiftInvariance) {
    Rng rng = make_rng(4, Stream::dataset);
    for (int t = 0; t < 20; ++t) {
        const auto l = random_vec(10, rng);
        auto p = random_vec(10, rng);
        const double a = task::rank_bce_loss(pairs_of(l, p)).item();
        const double b = task::marginal_ranking_loss(pairs_of(l, p)).item();
        const double c = 10 * uniform01(rng) - 5;
        for (auto& v : p) v += c;
        EXPECT_NEAR(task::rank_bce_loss(pairs_of(l, p)).item(), a, 1e-12);
        EXPECT_NEAR(task::marginal_ranking_loss(pairs_of(l, p)).item(), b, 1e-12);
    }
}

TEST(RankingLosses, NonNegative) {
    Rng rng = make_rng(5, Stream::dataset);
    for (int t = 0; t < 200; ++t) {
        const auto l = random_vec(6, rng), p = random_vec(6, rng, -30, 30);
        EXPECT_GE(task::rank_bce_loss(pairs_of(l, p)).item(), 0.0);
        EXPECT_GE(task::marginal_ranking_loss(pairs_of(l, p)).item(), 0.0);
    }
}

TEST(RankingLosses, GradientsMatchFiniteDifferences) {
    Rng rng = make_rng(6, Stream::dataset);
    for (int t = 0; t < 10; ++t) {
        const auto l = random_vec(8, rng);
        for (auto kind : {task::RankingKind::marginal, task::RankingKind::rank_bce}) {
            const auto r = check_gradients(
                [&](const std::vector<Tensor>& x) {
                    const auto pb = task::make_pairs(vec(l), x[0]);
                    return kind == task::RankingKind::marginal ? task::marginal_ranking_loss(pb, 0.5)
                                                               : task::rank_bce_loss(pb);
                },
                {random_array({8}, rng, -2, 2)}, rng);
            EXPECT_LT(r.worst, 1e-4);
        }
    }
}

TEST(RankingLosses, TargetsCarryNoGradient) {
    auto targets = ad::parameter(NdArray(Shape{4}, std::vector<double>{1, 2, 3, 4}));
    auto pred = ad::parameter(NdArray(Shape{4}, std::vector<double>{0.1, 0.2, 0.3, 0.4}));
    const auto pb = task::make_pairs(targets, pred);
    ad::backward(task::rank_bce_loss(pb));
    EXPECT_FALSE(targets.has_grad());
    EXPECT_TRUE(pred.has_grad());
}

TEST(CombinedTaskLoss, EtaZeroIsCrossEntropy) {
    Rng rng = make_rng(7, Stream::dataset);
    const auto logits = ad::constant(random_array({4, 3}, rng));
    const std::vector<int> y{0, 1, 2, 0};
    const auto pb = pairs_of({1, 2, 3, 4}, {0.1, 0.5, 0.2, 0.4});
    for (auto kind : {task::RankingKind::marginal, task::RankingKind::rank_bce})
        EXPECT_EQ(task::combined_task_loss(logits, y, pb, 0.0, kind).item(),
                  ad::softmax_cross_entropy(logits, y).item());
    EXPECT_THROW(task::combined_task_loss(logits, y, pb, -1.0, task::RankingKind::rank_bce), InputError);
}

TEST(CombinedTaskLoss, EtaOneIsSum) {
    Rng rng = make_rng(8, Stream::dataset);
    const auto logits = ad::constant(random_array({4, 3}, rng));
    const std::vector<int> y{2, 1, 0, 0};
    const auto pb = pairs_of({4, 2, 3, 1}, {0.1, 0.5, 0.2, 0.4});
    const double ce = ad::softmax_cross_entropy(logits, y).item();
    EXPECT_NEAR(task::combined_task_loss(logits, y, pb, 1.0, task::RankingKind::rank_bce).item(),
                ce + task::rank_bce_loss(pb).item(), 1e-14);
    EXPECT_NEAR(task::combined_task_loss(logits, y, pb, 1.0, task::RankingKind::marginal, 0.5).item(),
                ce + task::marginal_ranking_loss(pb, 0.5).item(), 1e-14);
}

TEST(CombinedTaskLoss, RankerHeadGradientScalesWithEta) {
    Rng rng = make_rng(9, Stream::task_init);
    task::TaskNet net({task::TaskArch::mlp, {5}, 3, 4, 4}, rng);
    task::Ranker ranker(net.tap_widths(), 3, rng);
    const auto x = ad::constant(random_array({6, 5}, rng));
    const std::vector<int> y{0, 1, 2, 2, 1, 0};
    const auto head = ranker.params();
    const double eta = 0.37;
    for (auto kind : {task::RankingKind::marginal, task::RankingKind::rank_bce}) {
        auto build = [&](bool combined) {
            const auto out = net.forward(x);
            const auto pb = task::make_pairs(ad::detach(ad::per_sample_cross_entropy(out.logits, y)),
                                             ranker.forward(out.features));
            if (combined) return task::combined_task_loss(out.logits, y, pb, eta, kind, 1.0);
            return kind == task::RankingKind::marginal ? task::marginal_ranking_loss(pb, 1.0) : task::rank_bce_loss(pb);
        };
        const auto g_comb = ad::forward_backward(build(true), head);
        const auto g_rank = ad::forward_backward(build(false), head);
        for (const auto& [name, g] : g_comb)
            for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], eta * g_rank.at(name)[i], 1e-14) << name;
    }
}

TEST(RankerLearnability, RankBceQuick) {
    const auto r = ranker_learnability(0, task::RankingKind::rank_bce);
    EXPECT_GT(r.final_accuracy, 0.9);
    EXPECT_GT(r.steps_to_target, 0u);
}

TEST(RankerLearnability, MarginalQuick) {
    const auto r = ranker_learnability(0, task::RankingKind::marginal);
    EXPECT_GT(r.final_accuracy, 0.9);
    EXPECT_GT(r.steps_to_target, 0u);
}
