#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tavaal {

using Rng = std::mt19937_64;

/// Independent purpose-specific random streams, so that changing how one
/// consumer draws numbers never shifts another consumer's sequence.
enum class Stream : std::uint32_t {
    pool_init = 1,
    task_init,
    task_shuffle,
    vae_init,
    vae_shuffle,
    vae_noise,
    subset,
    select,
    dataset,
    test_split,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t stage = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stage),
                      static_cast<std::uint32_t>(stage >> 32)};
    return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline std::vector<double> standard_normal(Rng& rng, std::size_t n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

/// Fisher-Yates shuffle driven by `rng`.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

} // namespace tavaal
