#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "tavaal/error.hpp"
#include "tavaal/strategies/selection.hpp"
#include "tavaal/task/ranking_losses.hpp"

namespace tavaal::experiment {

enum class DatasetKind { synthetic, idx };
enum class RankSourceKind { predicted, true_loss };

/// Every knob of an active-learning run. Defaults are the desk-scale schedule.
struct ExperimentConfig {
    // data
    DatasetKind dataset = DatasetKind::synthetic;
    std::string train_images, train_labels, test_images, test_labels;
    std::vector<std::size_t> imbalance_counts; // empty: keep the dataset as loaded
    std::uint64_t data_seed = 1234;
    std::size_t synth_classes = 4;
    std::size_t synth_dim = 8;
    double synth_separation = 3.0;
    std::vector<std::size_t> synth_train_counts{500, 500, 500, 500};
    std::size_t synth_test_per_class = 250;
    bool augment = false;

    // protocol
    strategies::StrategyKind strategy = strategies::StrategyKind::ta_vaal;
    std::size_t initial_labeled = 100;
    std::size_t budget = 100;
    std::size_t stages = 5;
    std::size_t subset_factor = 10;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string out_dir = "out";

    // objectives
    double lambda = 1.0;
    double eta = 1.0;
    double epsilon = 1.0;
    task::RankingKind ranking_kind = task::RankingKind::rank_bce; // used by ta-vaal
    RankSourceKind rank_source = RankSourceKind::predicted;

    // task learner
    std::size_t task_width1 = 8;
    std::size_t task_width2 = 16;
    std::size_t ranker_width = 16;
    std::size_t task_epochs = 30;
    double task_lr = 0.1;
    double task_lr_after = 0.01;
    double task_lr_drop_fraction = 0.8;
    double task_momentum = 0.9;
    double task_weight_decay = 0.005;
    std::size_t batch_size = 64;
    bool warm_start_task = false;

    // VAE + discriminator
    std::size_t vae_epochs = 30;
    double vae_lr = 5e-4;
    std::size_t vae_hidden = 128;
    std::size_t latent_dim = 16;
    std::size_t disc_hidden = 64;
    std::size_t disc_steps = 1; // discriminator updates per VAE update
    bool warm_start_vae = false;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0)) throw ConfigError(std::string(name) + " must be positive");
        };
        positive(static_cast<double>(initial_labeled), "initial_labeled");
        positive(static_cast<double>(budget), "budget");
        positive(static_cast<double>(subset_factor), "subset_factor");
        positive(static_cast<double>(task_epochs), "task_epochs");
        positive(static_cast<double>(vae_epochs), "vae_epochs");
        positive(static_cast<double>(batch_size), "batch_size");
        positive(static_cast<double>(latent_dim), "latent_dim");
        positive(static_cast<double>(disc_steps), "disc_steps");
        positive(task_lr, "task_lr");
        positive(task_lr_after, "task_lr_after");
        positive(vae_lr, "vae_lr");
        positive(epsilon, "epsilon");
        if (lambda < 0) throw ConfigError("lambda must be non-negative");
        if (eta < 0) throw ConfigError("eta must be non-negative");
        if (task_lr_drop_fraction < 0 || task_lr_drop_fraction > 1)
            throw ConfigError("task_lr_drop_fraction must lie in [0, 1]");
        if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
        if (dataset == DatasetKind::idx && (train_images.empty() || train_labels.empty() || test_images.empty() ||
                                            test_labels.empty()))
            throw ConfigError("idx dataset needs train_images, train_labels, test_images and test_labels");
        if (dataset == DatasetKind::synthetic && synth_train_counts.size() != synth_classes)
            throw ConfigError("synth_train_counts needs one entry per class");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    if (std::is_unsigned_v<T> && !v.empty() && v[0] == '-') throw ConfigError(key + " must be non-negative");
    std::istringstream is(v);
    T out{};
    std::string rest;
    if (!(is >> out) || (is >> rest)) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number<T>(key, item));
    }
    return out;
}

} // namespace detail

/// Sets one key. Paths are resolved against `base_dir` when relative.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value,
                          const std::filesystem::path& base_dir = {}) {
    using namespace detail;
    auto path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
    };
    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"dataset",
         [&](const std::string& v) {
             if (v == "synthetic") c.dataset = DatasetKind::synthetic;
             else if (v == "idx") c.dataset = DatasetKind::idx;
             else throw ConfigError("dataset must be 'synthetic' or 'idx'");
         }},
        {"train_images", [&](const std::string& v) { c.train_images = path(v); }},
        {"train_labels", [&](const std::string& v) { c.train_labels = path(v); }},
        {"test_images", [&](const std::string& v) { c.test_images = path(v); }},
        {"test_labels", [&](const std::string& v) { c.test_labels = path(v); }},
        {"imbalance_counts", [&](const std::string& v) { c.imbalance_counts = parse_list<std::size_t>(key, v); }},
        {"data_seed", [&](const std::string& v) { c.data_seed = parse_number<std::uint64_t>(key, v); }},
        {"synth_classes", [&](const std::string& v) { c.synth_classes = parse_number<std::size_t>(key, v); }},
        {"synth_dim", [&](const std::string& v) { c.synth_dim = parse_number<std::size_t>(key, v); }},
        {"synth_separation", [&](const std::string& v) { c.synth_separation = parse_number<double>(key, v); }},
        {"synth_train_counts", [&](const std::string& v) { c.synth_train_counts = parse_list<std::size_t>(key, v); }},
        {"synth_test_per_class", [&](const std::string& v) { c.synth_test_per_class = parse_number<std::size_t>(key, v); }},
        {"augment", [&](const std::string& v) { c.augment = parse_bool(key, v); }},
        {"strategy", [&](const std::string& v) { c.strategy = strategies::parse_strategy(v); }},
        {"initial_labeled", [&](const std::string& v) { c.initial_labeled = parse_number<std::size_t>(key, v); }},
        {"budget", [&](const std::string& v) { c.budget = parse_number<std::size_t>(key, v); }},
        {"stages", [&](const std::string& v) { c.stages = parse_number<std::size_t>(key, v); }},
        {"subset_factor", [&](const std::string& v) { c.subset_factor = parse_number<std::size_t>(key, v); }},
        {"seeds", [&](const std::string& v) { c.seeds = parse_list<std::uint64_t>(key, v); }},
        {"out_dir", [&](const std::string& v) { c.out_dir = v; }},
        {"lambda", [&](const std::string& v) { c.lambda = parse_number<double>(key, v); }},
        {"eta", [&](const std::string& v) { c.eta = parse_number<double>(key, v); }},
        {"epsilon", [&](const std::string& v) { c.epsilon = parse_number<double>(key, v); }},
        {"ranking_kind",
         [&](const std::string& v) {
             if (v == "marginal") c.ranking_kind = task::RankingKind::marginal;
             else if (v == "rank-bce") c.ranking_kind = task::RankingKind::rank_bce;
             else throw ConfigError("ranking_kind must be 'marginal' or 'rank-bce'");
         }},
        {"rank_source",
         [&](const std::string& v) {
             if (v == "predicted") c.rank_source = RankSourceKind::predicted;
             else if (v == "true") c.rank_source = RankSourceKind::true_loss;
             else throw ConfigError("rank_source must be 'predicted' or 'true'");
         }},
        {"task_width1", [&](const std::string& v) { c.task_width1 = parse_number<std::size_t>(key, v); }},
        {"task_width2", [&](const std::string& v) { c.task_width2 = parse_number<std::size_t>(key, v); }},
        {"ranker_width", [&](const std::string& v) { c.ranker_width = parse_number<std::size_t>(key, v); }},
        {"task_epochs", [&](const std::string& v) { c.task_epochs = parse_number<std::size_t>(key, v); }},
        {"task_lr", [&](const std::string& v) { c.task_lr = parse_number<double>(key, v); }},
        {"task_lr_after", [&](const std::string& v) { c.task_lr_after = parse_number<double>(key, v); }},
        {"task_lr_drop_fraction", [&](const std::string& v) { c.task_lr_drop_fraction = parse_number<double>(key, v); }},
        {"task_momentum", [&](const std::string& v) { c.task_momentum = parse_number<double>(key, v); }},
        {"task_weight_decay", [&](const std::string& v) { c.task_weight_decay = parse_number<double>(key, v); }},
        {"batch_size", [&](const std::string& v) { c.batch_size = parse_number<std::size_t>(key, v); }},
        {"warm_start_task", [&](const std::string& v) { c.warm_start_task = parse_bool(key, v); }},
        {"vae_epochs", [&](const std::string& v) { c.vae_epochs = parse_number<std::size_t>(key, v); }},
        {"vae_lr", [&](const std::string& v) { c.vae_lr = parse_number<double>(key, v); }},
        {"vae_hidden", [&](const std::string& v) { c.vae_hidden = parse_number<std::size_t>(key, v); }},
        {"latent_dim", [&](const std::string& v) { c.latent_dim = parse_number<std::size_t>(key, v); }},
        {"disc_hidden", [&](const std::string& v) { c.disc_hidden = parse_number<std::size_t>(key, v); }},
        {"disc_steps", [&](const std::string& v) { c.disc_steps = parse_number<std::size_t>(key, v); }},
        {"warm_start_vae", [&](const std::string& v) { c.warm_start_vae = parse_bool(key, v); }},
    };
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(value);
}

/// Parses `key = value` lines; `#` starts a comment.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), base_dir);
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in, path.parent_path());
}

} // namespace tavaal::experiment
