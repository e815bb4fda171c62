#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "tavaal/adversary/objectives.hpp"
#include "tavaal/autodiff/optim.hpp"
#include "tavaal/data/dataset.hpp"
#include "tavaal/data/sampling.hpp"
#include "tavaal/random.hpp"
#include "tavaal/task/ranker.hpp"
#include "tavaal/task/ranking_losses.hpp"
#include "tavaal/task/task_net.hpp"

namespace tavaal::experiment {

struct TaskTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double lr = 0.1;
    double lr_after = 0.01;
    double lr_drop_fraction = 0.8;
    double momentum = 0.9;
    double weight_decay = 0.005;
    double eta = 1.0;
    double epsilon = 1.0;
    task::RankingKind ranking_kind = task::RankingKind::rank_bce;
    bool augment = false;
};

/// Task learner with an optional loss-prediction head.
struct TaskModel {
    task::TaskNet net;
    std::optional<task::Ranker> ranker;

    ad::ParamSet params() const {
        return ranker ? ad::concat_params({net.params(), ranker->params()}) : net.params();
    }
};

/// Minibatch of `indices`, augmented when requested and the samples are images.
inline ad::NdArray training_batch(const data::Dataset& ds, std::span<const std::size_t> indices, bool augment,
                                  Rng& rng) {
    ad::NdArray batch = data::gather_batch(ds, indices);
    if (!augment || ds.sample_shape.size() != 3) return batch;
    const std::size_t n = ds.sample_size();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto img = data::augment(ds.sample(indices[k]), ds.sample_shape, rng);
        std::copy(img.begin(), img.end(), batch.data() + k * n);
    }
    return batch;
}

/// SGD training on the labeled samples. With a ranker attached the objective
/// is cross-entropy plus eta times the ranking loss on consecutive pairs.
inline void train_task(TaskModel& model, const data::Dataset& ds, std::span<const std::size_t> labeled,
                       const TaskTrainConfig& cfg, Rng& rng) {
    if (labeled.empty()) throw InputError("train_task: empty labeled set");
    ad::ParamSet params = model.params();
    ad::OptimizerState state = ad::OptimizerState::for_config(ad::SgdConfig{});
    const auto drop_epoch = static_cast<std::size_t>(cfg.lr_drop_fraction * static_cast<double>(cfg.epochs));
    std::vector<std::size_t> order(labeled.begin(), labeled.end());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const ad::SgdConfig sgd{epoch < drop_epoch ? cfg.lr : cfg.lr_after, cfg.momentum, cfg.weight_decay};
        shuffle(order, rng);
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::span<const std::size_t> idx(order.data() + at, std::min(cfg.batch_size, order.size() - at));
            const auto x = ad::constant(training_batch(ds, idx, cfg.augment, rng));
            const auto y = data::gather_labels(ds, idx);
            const auto out = model.net.forward(x);
            ad::Tensor loss;
            if (model.ranker && idx.size() >= 2 && cfg.eta > 0) {
                const auto per_sample = ad::per_sample_cross_entropy(out.logits, y);
                const auto pairs = task::make_pairs(ad::detach(per_sample), model.ranker->forward(out.features));
                loss = task::combined_task_loss(out.logits, y, pairs, cfg.eta, cfg.ranking_kind, cfg.epsilon);
            } else {
                loss = ad::softmax_cross_entropy(out.logits, y);
            }
            const auto grads = ad::forward_backward(loss, params);
            ad::optimizer_step(params, grads, state, sgd);
        }
    }
}

inline std::vector<int> predict(const task::TaskNet& net, const data::Dataset& ds, std::size_t batch = 256) {
    ad::NoGradGuard guard;
    std::vector<int> out;
    out.reserve(ds.size());
    std::vector<std::size_t> idx;
    for (std::size_t at = 0; at < ds.size(); at += batch) {
        idx.clear();
        for (std::size_t i = at; i < std::min(ds.size(), at + batch); ++i) idx.push_back(i);
        const auto logits = net.forward(ad::constant(data::gather_batch(ds, idx))).logits;
        const std::size_t C = logits.dim(1);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double* row = logits.value().data() + r * C;
            out.push_back(static_cast<int>(std::max_element(row, row + C) - row));
        }
    }
    return out;
}

/// Top-1 accuracy.
inline double evaluate_accuracy(const task::TaskNet& net, const data::Dataset& test) {
    if (test.size() == 0) throw InputError("evaluate_accuracy: empty test set");
    const auto pred = predict(net, test);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == test.labels[i];
    return static_cast<double>(hit) / static_cast<double>(test.size());
}

/// Per-sample cross-entropy of the trained task learner (true losses).
inline std::vector<double> true_losses(const task::TaskNet& net, const data::Dataset& ds,
                                       std::span<const std::size_t> indices) {
    ad::NoGradGuard guard;
    const auto x = ad::constant(data::gather_batch(ds, indices));
    const auto y = data::gather_labels(ds, indices);
    const auto l = ad::per_sample_cross_entropy(net.forward(x).logits, y);
    return {l.value().values().begin(), l.value().values().end()};
}

struct AdversaryTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double lr = 5e-4;
    double lambda = 1.0;
    std::size_t disc_steps = 1;
};

struct AdversaryModel {
    adversary::CondVAE vae;
    adversary::Discriminator disc;
};

/// Per-sample loss scores used to build rank variables; absent for VAAL.
struct RankInputs {
    std::vector<double> labeled;
    std::vector<double> unlabeled;
};

/// Adam state for both adversarial players.
struct AdversaryOptimizers {
    ad::OptimizerState vae = ad::OptimizerState::for_config(ad::AdamConfig{});
    ad::OptimizerState disc = ad::OptimizerState::for_config(ad::AdamConfig{});
};

/// One VAE update: transductive + adversarial loss, stepping only VAE
/// parameters (the discriminator is read, never written).
inline double adversary_vae_step(AdversaryModel& model, const ad::Tensor& xl, const adversary::RankVariable& rl,
                                 const ad::Tensor& xu, const adversary::RankVariable& ru, double lambda,
                                 ad::OptimizerState& state, const ad::AdamConfig& adam, Rng& noise_rng) {
    ad::ParamSet params = model.vae.params();
    const auto el = model.vae.encode(xl);
    const auto eu = model.vae.encode(xu);
    const std::size_t d = model.vae.latent_dim();
    const ad::Shape sl{xl.dim(0), d}, su{xu.dim(0), d};
    const ad::NdArray nl(sl, standard_normal(noise_rng, ad::shape_size(sl)));
    const ad::NdArray nu(su, standard_normal(noise_rng, ad::shape_size(su)));
    const auto trans = ad::add(adversary::pool_vae_term(model.vae, xl, el, rl, lambda, nl),
                               adversary::pool_vae_term(model.vae, xu, eu, ru, lambda, nu));
    const auto loss = ad::add(trans, adversary::vae_adversarial_loss(model.disc, rl, el.mu, ru, eu.mu));
    const auto grads = ad::forward_backward(loss, params);
    for (auto p : model.disc.params()) p.tensor.zero_grad();
    ad::optimizer_step(params, grads, state, adam);
    return loss.item();
}

/// One discriminator update on detached encoder means.
inline double adversary_disc_step(AdversaryModel& model, const ad::Tensor& xl, const adversary::RankVariable& rl,
                                  const ad::Tensor& xu, const adversary::RankVariable& ru, ad::OptimizerState& state,
                                  const ad::AdamConfig& adam) {
    ad::ParamSet params = model.disc.params();
    ad::Tensor zl, zu;
    {
        ad::NoGradGuard guard;
        zl = model.vae.encode(xl).mu;
        zu = model.vae.encode(xu).mu;
    }
    const auto loss = adversary::discriminator_loss(model.disc, rl, zl, ru, zu);
    ad::optimizer_step(params, ad::forward_backward(loss, params), state, adam);
    return loss.item();
}

/// Alternating VAE / discriminator training. Each iteration draws one
/// labeled and one unlabeled minibatch (both cycled); ranks are normalised
/// over the union of the two minibatches.
inline void train_adversary(AdversaryModel& model, const data::Dataset& ds, std::span<const std::size_t> labeled,
                            std::span<const std::size_t> unlabeled, const std::optional<RankInputs>& ranks,
                            const AdversaryTrainConfig& cfg, Rng& shuffle_rng, Rng& noise_rng) {
    if (labeled.empty() || unlabeled.empty()) throw InputError("train_adversary: both pools must be non-empty");
    const bool conditioned = model.vae.config().rank_conditioned;
    if (conditioned && (!ranks || ranks->labeled.size() != labeled.size() || ranks->unlabeled.size() != unlabeled.size()))
        throw ConfigError("train_adversary: rank-conditioned model needs one score per sample");

    AdversaryOptimizers opt;
    const ad::AdamConfig adam{cfg.lr};

    // Positions into labeled / unlabeled, reshuffled whenever exhausted.
    struct Cycler {
        std::vector<std::size_t> order;
        std::size_t at = 0;
        std::vector<std::size_t> next(std::size_t n, Rng& rng) {
            std::vector<std::size_t> out;
            n = std::min(n, order.size());
            while (out.size() < n) {
                if (at == 0) shuffle(order, rng);
                out.push_back(order[at]);
                at = (at + 1) % order.size();
            }
            return out;
        }
    };
    auto positions = [](std::size_t n) {
        std::vector<std::size_t> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = i;
        return v;
    };
    Cycler lab{positions(labeled.size())}, unl{positions(unlabeled.size())};

    const std::size_t per_epoch = (labeled.size() + unlabeled.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t iterations = cfg.epochs * per_epoch;
    for (std::size_t it = 0; it < iterations; ++it) {
        const auto pl = lab.next(cfg.batch_size, shuffle_rng);
        const auto pu = unl.next(cfg.batch_size, shuffle_rng);
        std::vector<std::size_t> il, iu;
        for (auto p : pl) il.push_back(labeled[p]);
        for (auto p : pu) iu.push_back(unlabeled[p]);
        const auto xl = ad::constant(data::gather_batch(ds, il));
        const auto xu = ad::constant(data::gather_batch(ds, iu));

        adversary::RankVariable rl, ru;
        if (conditioned) {
            std::vector<double> joint;
            for (auto p : pl) joint.push_back(ranks->labeled[p]);
            for (auto p : pu) joint.push_back(ranks->unlabeled[p]);
            const auto r = adversary::normalize_ranks(joint);
            rl = r.slice(0, pl.size());
            ru = r.slice(pl.size(), joint.size());
        }

        adversary_vae_step(model, xl, rl, xu, ru, cfg.lambda, opt.vae, adam, noise_rng);
        for (std::size_t k = 0; k < cfg.disc_steps; ++k) adversary_disc_step(model, xl, rl, xu, ru, opt.disc, adam);
    }
}

} // namespace tavaal::experiment
