#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tavaal/error.hpp"

namespace tavaal::experiment {

inline constexpr std::size_t histogram_bins = 20;

struct StageRecord {
    std::size_t stage = 0;
    std::size_t labeled = 0;
    double accuracy = 0;
    std::vector<std::size_t> selected; // queried at the end of this stage
    double selection_entropy = 0;      // class-count entropy of the labeled pool at this stage
    std::vector<std::size_t> histogram; // discriminator outputs over the candidates; empty without one
    std::size_t candidates = 0;
    double wall_s = 0;
    bool truncated = false; // the unlabeled pool could not cover another query
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::string strategy;
    std::vector<std::size_t> initial_labeled;
    std::vector<StageRecord> records;
};

/// Count of `values` in 20 equal bins over [0, 1]; 1.0 lands in the last bin.
inline std::vector<std::size_t> unit_histogram(const std::vector<double>& values) {
    std::vector<std::size_t> h(histogram_bins, 0);
    for (double v : values) {
        auto bin = static_cast<std::ptrdiff_t>(v * static_cast<double>(histogram_bins));
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(histogram_bins) - 1);
        ++h[static_cast<std::size_t>(bin)];
    }
    return h;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {
inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

inline std::vector<const TrialResult*> sorted(const std::vector<TrialResult>& trials) {
    std::vector<const TrialResult*> out;
    for (const auto& t : trials) out.push_back(&t);
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->seed < b->seed; });
    return out;
}
} // namespace detail

/// Header `seed,stage,labeled,accuracy,selection_entropy,wall_s`, rows by (seed, stage).
inline void export_metrics(const std::vector<TrialResult>& trials, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "seed,stage,labeled,accuracy,selection_entropy,wall_s\n";
    for (const auto* t : detail::sorted(trials))
        for (const auto& r : t->records)
            out << t->seed << ',' << r.stage << ',' << r.labeled << ',' << detail::fmt("%.6f", r.accuracy) << ','
                << detail::fmt("%.6f", r.selection_entropy) << ',' << detail::fmt("%.3f", r.wall_s) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

/// Header `seed,stage,bin_lo,bin_hi,count`, rows by (seed, stage, bin). Stages
/// without a discriminator histogram contribute no rows.
inline void export_histogram(const std::vector<TrialResult>& trials, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "seed,stage,bin_lo,bin_hi,count\n";
    const double w = 1.0 / static_cast<double>(histogram_bins);
    for (const auto* t : detail::sorted(trials))
        for (const auto& r : t->records)
            for (std::size_t b = 0; b < r.histogram.size(); ++b)
                out << t->seed << ',' << r.stage << ',' << detail::fmt("%.2f", b * w) << ','
                    << detail::fmt("%.2f", (b + 1) * w) << ',' << r.histogram[b] << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

/// Header `seed,stage,index`: each index with the stage at which it first
/// sits in the labeled pool (0 = initial pool, s = queried at the end of s-1).
inline void export_selection_log(const std::vector<TrialResult>& trials, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "seed,stage,index\n";
    for (const auto* t : detail::sorted(trials)) {
        for (auto i : t->initial_labeled) out << t->seed << ",0," << i << '\n';
        for (const auto& r : t->records)
            for (auto i : r.selected) out << t->seed << ',' << r.stage + 1 << ',' << i << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

/// seed -> cumulative labeled index set per stage (stage 0 first).
using SelectionLog = std::map<std::uint64_t, std::vector<std::vector<std::size_t>>>;

inline SelectionLog read_selection_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open selection log " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "seed,stage,index")
        throw FormatError(path.string() + ": expected header 'seed,stage,index'");
    std::map<std::uint64_t, std::map<std::size_t, std::vector<std::size_t>>> added;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::uint64_t seed;
        std::size_t stage, index;
        char c1, c2;
        if (!(is >> seed >> c1 >> stage >> c2 >> index) || c1 != ',' || c2 != ',')
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
        added[seed][stage].push_back(index);
    }
    SelectionLog log;
    for (auto& [seed, stages] : added) {
        std::vector<std::size_t> cumulative;
        auto& out = log[seed];
        const std::size_t last = stages.rbegin()->first;
        for (std::size_t s = 0; s <= last; ++s) {
            auto it = stages.find(s);
            if (it == stages.end()) throw FormatError(path.string() + ": seed " + std::to_string(seed) + " skips stage " + std::to_string(s));
            cumulative.insert(cumulative.end(), it->second.begin(), it->second.end());
            std::vector<std::size_t> sorted = cumulative;
            std::sort(sorted.begin(), sorted.end());
            out.push_back(std::move(sorted));
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// JSON persistence of raw records

inline void to_json(nlohmann::json& j, const StageRecord& r) {
    j = {{"stage", r.stage},         {"labeled", r.labeled},           {"accuracy", r.accuracy},
         {"selected", r.selected},   {"selection_entropy", r.selection_entropy},
         {"histogram", r.histogram}, {"candidates", r.candidates},     {"wall_s", r.wall_s},
         {"truncated", r.truncated}};
}

inline void from_json(const nlohmann::json& j, StageRecord& r) {
    j.at("stage").get_to(r.stage);
    j.at("labeled").get_to(r.labeled);
    j.at("accuracy").get_to(r.accuracy);
    j.at("selected").get_to(r.selected);
    j.at("selection_entropy").get_to(r.selection_entropy);
    j.at("histogram").get_to(r.histogram);
    j.at("candidates").get_to(r.candidates);
    j.at("wall_s").get_to(r.wall_s);
    j.at("truncated").get_to(r.truncated);
}

inline void to_json(nlohmann::json& j, const TrialResult& t) {
    j = {{"seed", t.seed}, {"strategy", t.strategy}, {"initial_labeled", t.initial_labeled}, {"records", t.records}};
}

inline void from_json(const nlohmann::json& j, TrialResult& t) {
    j.at("seed").get_to(t.seed);
    j.at("strategy").get_to(t.strategy);
    j.at("initial_labeled").get_to(t.initial_labeled);
    j.at("records").get_to(t.records);
}

inline constexpr const char* records_file = "records.json";

inline void save_records(const std::vector<TrialResult>& trials, const std::filesystem::path& dir) {
    auto out = detail::open_out(dir / records_file);
    out << nlohmann::json(trials).dump(1) << '\n';
    if (!out) throw IoError("write failed: " + (dir / records_file).string());
}

inline std::vector<TrialResult> load_records(const std::filesystem::path& dir) {
    const auto path = dir / records_file;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in).get<std::vector<TrialResult>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

/// Writes metrics.csv, histogram.csv and selection_log.csv into `dir`.
inline void export_all(const std::vector<TrialResult>& trials, const std::filesystem::path& dir) {
    export_metrics(trials, dir / "metrics.csv");
    export_histogram(trials, dir / "histogram.csv");
    export_selection_log(trials, dir / "selection_log.csv");
}

} // namespace tavaal::experiment
