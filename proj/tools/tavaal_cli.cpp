#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tavaal/tavaal.hpp"

namespace ex = tavaal::experiment;

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::string>& strategy,
            const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out) {
    auto cfg = ex::load_config(config_path);
    if (strategy) cfg.strategy = tavaal::strategies::parse_strategy(*strategy);
    if (seed) cfg.seeds = {*seed};
    if (out) cfg.out_dir = *out;
    const auto trials = ex::run_experiment(cfg);
    ex::save_records(trials, cfg.out_dir);
    ex::export_all(trials, cfg.out_dir);
    for (const auto& t : trials) {
        const auto& last = t.records.back();
        std::printf("seed %llu  %s  stage %zu  labeled %zu  accuracy %.4f%s\n",
                    static_cast<unsigned long long>(t.seed), t.strategy.c_str(), last.stage, last.labeled,
                    last.accuracy, last.truncated ? "  (truncated)" : "");
    }
    return 0;
}

int cmd_evaluate_log(const std::string& log_path, const std::string& config_path) {
    const auto cfg = ex::load_config(config_path);
    const auto log = ex::read_selection_log(log_path);
    const auto data = ex::load_data(cfg);
    std::printf("seed,stage,labeled,accuracy\n");
    for (const auto& r : ex::evaluate_selection_log(log, cfg, data))
        std::printf("%llu,%zu,%zu,%.6f\n", static_cast<unsigned long long>(r.seed), r.stage, r.labeled, r.accuracy);
    return 0;
}

int cmd_export(const std::string& records_dir, const std::string& out_dir) {
    ex::export_all(ex::load_records(records_dir), out_dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-aware variational adversarial active learning"};
    app.require_subcommand(1);

    std::string config_path, log_path, records_dir, out_dir;
    std::optional<std::string> strategy, out;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run the staged active-learning protocol");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--strategy", strategy, "random | learning-loss | learning-loss-v2 | vaal | ta-vaal");
    run->add_option("--seed", seed, "Run a single seed");
    run->add_option("--out", out, "Output directory");

    auto* eval = app.add_subcommand("evaluate-log", "Retrain a plain classifier on a logged selection");
    eval->add_option("--log", log_path, "selection_log.csv")->required();
    eval->add_option("--config", config_path, "Config file")->required();

    auto* exp = app.add_subcommand("export", "Re-export CSVs from saved records");
    exp->add_option("--records", records_dir, "Directory holding records.json")->required();
    exp->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, strategy, seed, out);
        if (*eval) return cmd_evaluate_log(log_path, config_path);
        if (*exp) return cmd_export(records_dir, out_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
