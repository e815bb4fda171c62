#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <vector>

#include "tavaal/data/idx.hpp"
#include "tavaal/data/pool.hpp"
#include "tavaal/data/sampling.hpp"
#include "tavaal/experiment/config.hpp"
#include "tavaal/experiment/records.hpp"
#include "tavaal/experiment/training.hpp"
#include "tavaal/strategies/selection.hpp"

namespace tavaal::experiment {

struct DataBundle {
    std::shared_ptr<const data::Dataset> train;
    std::shared_ptr<const data::Dataset> test;
};

/// Builds train/test splits. Test data is normalised with training statistics.
inline DataBundle load_data(const ExperimentConfig& cfg) {
    data::Dataset train, test;
    if (cfg.dataset == DatasetKind::idx) {
        train = data::load_idx(cfg.train_images, cfg.train_labels);
        test = data::load_idx(cfg.test_images, cfg.test_labels, &*train.normalization, train.num_classes);
    } else {
        Rng rng = make_rng(cfg.data_seed, Stream::dataset);
        train = data::synth_gaussian_mixture(cfg.synth_classes, cfg.synth_train_counts, cfg.synth_dim,
                                             cfg.synth_separation, rng);
        Rng trng = make_rng(cfg.data_seed, Stream::test_split);
        const std::vector<std::size_t> per(cfg.synth_classes, cfg.synth_test_per_class);
        test = data::synth_gaussian_mixture(cfg.synth_classes, per, cfg.synth_dim, cfg.synth_separation, trng);
    }
    if (!cfg.imbalance_counts.empty()) {
        Rng rng = make_rng(cfg.data_seed, Stream::dataset, 1);
        train = data::make_imbalanced(train, cfg.imbalance_counts, rng);
    }
    return {std::make_shared<const data::Dataset>(std::move(train)),
            std::make_shared<const data::Dataset>(std::move(test))};
}

inline task::TaskNetConfig task_net_config(const ExperimentConfig& cfg, const data::Dataset& ds) {
    return {ds.sample_shape.size() == 3 ? task::TaskArch::conv : task::TaskArch::mlp, ds.sample_shape,
            ds.num_classes, cfg.task_width1, cfg.task_width2};
}

/// Which ranking loss (if any) a strategy's task learner trains with.
inline std::optional<task::RankingKind> ranking_for(const ExperimentConfig& cfg) {
    using strategies::StrategyKind;
    switch (cfg.strategy) {
    case StrategyKind::learning_loss: return task::RankingKind::marginal;
    case StrategyKind::learning_loss_v2: return task::RankingKind::rank_bce;
    case StrategyKind::ta_vaal: return cfg.ranking_kind;
    default: return std::nullopt;
    }
}

inline TaskTrainConfig task_train_config(const ExperimentConfig& cfg, bool with_ranker) {
    TaskTrainConfig t;
    t.epochs = cfg.task_epochs;
    t.batch_size = cfg.batch_size;
    t.lr = cfg.task_lr;
    t.lr_after = cfg.task_lr_after;
    t.lr_drop_fraction = cfg.task_lr_drop_fraction;
    t.momentum = cfg.task_momentum;
    t.weight_decay = cfg.task_weight_decay;
    t.eta = with_ranker ? cfg.eta : 0.0;
    t.epsilon = cfg.epsilon;
    if (auto k = ranking_for(cfg)) t.ranking_kind = *k;
    t.augment = cfg.augment;
    return t;
}

/// Fresh task learner for a stage; the ranker draws from the same stream
/// after the network, so the network's initialisation never depends on it.
inline TaskModel make_task_model(const ExperimentConfig& cfg, const data::Dataset& ds, bool with_ranker, Rng& rng) {
    TaskModel m{task::TaskNet(task_net_config(cfg, ds), rng), std::nullopt};
    if (with_ranker) m.ranker.emplace(m.net.tap_widths(), cfg.ranker_width, rng);
    return m;
}

inline AdversaryModel make_adversary(const ExperimentConfig& cfg, const data::Dataset& ds, bool conditioned, Rng& rng) {
    adversary::CondVAE vae({ds.sample_shape, cfg.vae_hidden, cfg.latent_dim, conditioned}, rng);
    adversary::Discriminator disc({cfg.latent_dim, cfg.disc_hidden, conditioned}, rng);
    return {std::move(vae), std::move(disc)};
}

/// One seeded trial of the staged protocol: train, evaluate, select, annotate.
inline TrialResult run_trial(const ExperimentConfig& cfg, const DataBundle& data, std::uint64_t seed) {
    using strategies::StrategyKind;
    cfg.validate();
    const data::Dataset& train = *data.train;
    const bool with_ranker = strategies::uses_ranker(cfg.strategy);
    const bool conditioned = cfg.strategy == StrategyKind::ta_vaal;

    Rng pool_rng = make_rng(seed, Stream::pool_init);
    data::Pool pool = data::init_pool(data.train, cfg.initial_labeled, pool_rng);

    TrialResult result;
    result.seed = seed;
    result.strategy = strategies::to_string(cfg.strategy);
    result.initial_labeled = pool.labeled();

    std::optional<TaskModel> task_model;
    std::optional<AdversaryModel> adversary_model;
    for (std::size_t stage = 0; stage <= cfg.stages; ++stage) {
        const auto t0 = std::chrono::steady_clock::now();
        StageRecord rec;
        rec.stage = stage;
        rec.labeled = pool.labeled().size();

        if (!task_model || !cfg.warm_start_task) {
            Rng init = make_rng(seed, Stream::task_init, stage);
            task_model = make_task_model(cfg, train, with_ranker, init);
        }
        Rng shuffle_rng = make_rng(seed, Stream::task_shuffle, stage);
        train_task(*task_model, train, pool.labeled(), task_train_config(cfg, with_ranker), shuffle_rng);
        rec.accuracy = evaluate_accuracy(task_model->net, *data.test);
        rec.selection_entropy = data::class_count_entropy(pool.labeled_targets(), train.num_classes);

        const bool last = stage == cfg.stages;
        if (!last && pool.unlabeled().size() < cfg.budget) rec.truncated = true;
        if (!last && !rec.truncated) {
            Rng subset_rng = make_rng(seed, Stream::subset, stage);
            const auto candidates = strategies::subset_sample(pool.unlabeled(), cfg.subset_factor * cfg.budget, subset_rng);
            rec.candidates = candidates.size();

            strategies::SelectionResult sel;
            switch (cfg.strategy) {
            case StrategyKind::random: {
                Rng rng = make_rng(seed, Stream::select, stage);
                sel = strategies::select_random(candidates, cfg.budget, rng);
                break;
            }
            case StrategyKind::learning_loss:
            case StrategyKind::learning_loss_v2:
                sel = strategies::select_by_predicted_loss(candidates, cfg.budget, task_model->net, *task_model->ranker,
                                                           train);
                break;
            case StrategyKind::vaal:
            case StrategyKind::ta_vaal: {
                if (!adversary_model || !cfg.warm_start_vae) {
                    Rng init = make_rng(seed, Stream::vae_init, stage);
                    adversary_model = make_adversary(cfg, train, conditioned, init);
                }
                std::optional<RankInputs> ranks;
                std::optional<std::vector<double>> candidate_scores;
                if (conditioned) {
                    RankInputs ri;
                    ri.labeled = cfg.rank_source == RankSourceKind::true_loss
                                     ? true_losses(task_model->net, train, pool.labeled())
                                     : strategies::predicted_losses(task_model->net, *task_model->ranker, train,
                                                                    pool.labeled());
                    ri.unlabeled = strategies::predicted_losses(task_model->net, *task_model->ranker, train, candidates);
                    candidate_scores = ri.unlabeled;
                    ranks = std::move(ri);
                }
                Rng vshuffle = make_rng(seed, Stream::vae_shuffle, stage);
                Rng vnoise = make_rng(seed, Stream::vae_noise, stage);
                const AdversaryTrainConfig acfg{cfg.vae_epochs, cfg.batch_size, cfg.vae_lr, cfg.lambda, cfg.disc_steps};
                train_adversary(*adversary_model, train, pool.labeled(), candidates, ranks, acfg, vshuffle, vnoise);

                sel.kind = cfg.strategy;
                sel.candidates = candidates;
                sel.scores = strategies::discriminator_scores(adversary_model->vae, adversary_model->disc,
                                                              candidate_scores, train, candidates);
                sel.chosen = strategies::bottom_b(sel.candidates, sel.scores, cfg.budget);
                rec.histogram = unit_histogram(sel.scores);
                break;
            }
            }
            sel.stage = stage;
            rec.selected = sel.chosen;
            pool = data::annotate(pool, sel.chosen);
        }
        rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.records.push_back(std::move(rec));
        if (result.records.back().truncated) break;
    }
    return result;
}

/// Runs every configured seed as an independent trial, sorted by seed.
inline std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const DataBundle data = load_data(cfg);
    std::vector<TrialResult> out;
    for (auto seed : cfg.seeds) out.push_back(run_trial(cfg, data, seed));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    return out;
}

struct RetrainResult {
    std::uint64_t seed = 0;
    std::size_t stage = 0;
    std::size_t labeled = 0;
    double accuracy = 0;
};

/// Retrains a plain task learner (no loss-prediction head) on every logged
/// cumulative labeled set and reports test accuracy.
inline std::vector<RetrainResult> evaluate_selection_log(const SelectionLog& log, const ExperimentConfig& cfg,
                                                         const DataBundle& data) {
    std::vector<RetrainResult> out;
    for (const auto& [seed, stages] : log)
        for (std::size_t s = 0; s < stages.size(); ++s) {
            const auto& labeled = stages[s];
            if (labeled.empty()) throw InputError("evaluate_selection_log: empty labeled set");
            if (labeled.back() >= data.train->size())
                throw InputError("evaluate_selection_log: index " + std::to_string(labeled.back()) +
                                 " outside the training set");
            if (std::adjacent_find(labeled.begin(), labeled.end()) != labeled.end())
                throw InputError("evaluate_selection_log: index logged twice");
            Rng init = make_rng(seed, Stream::task_init, s);
            TaskModel m = make_task_model(cfg, *data.train, false, init);
            Rng shuffle_rng = make_rng(seed, Stream::task_shuffle, s);
            train_task(m, *data.train, labeled, task_train_config(cfg, false), shuffle_rng);
            out.push_back({seed, s, labeled.size(), evaluate_accuracy(m.net, *data.test)});
        }
    return out;
}

} // namespace tavaal::experiment
