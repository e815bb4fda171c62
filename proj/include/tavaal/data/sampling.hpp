#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "tavaal/data/dataset.hpp"
#include "tavaal/random.hpp"

namespace tavaal::data {

/// Shannon entropy (nats) of a class histogram; empty classes contribute 0.
inline double class_count_entropy(std::span<const std::size_t> counts) {
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total <= 0) throw InputError("class_count_entropy: total count must be positive");
    double h = 0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

inline double class_count_entropy(std::span<const int> labels, std::size_t num_classes) {
    const auto hist = class_histogram(labels, num_classes);
    return class_count_entropy(std::span<const std::size_t>(hist));
}

/// Per-class uniform subsample to exactly `per_class_counts`. Kept samples
/// retain their original relative order.
inline Dataset make_imbalanced(const Dataset& ds, std::span<const std::size_t> per_class_counts, Rng& rng) {
    if (per_class_counts.size() != ds.num_classes)
        throw InputError("make_imbalanced: expected " + std::to_string(ds.num_classes) + " class counts");
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        if (per_class_counts[c] > by_class[c].size())
            throw InputError("make_imbalanced: class " + std::to_string(c) + " has " +
                             std::to_string(by_class[c].size()) + " samples, " +
                             std::to_string(per_class_counts[c]) + " requested");
        auto& idx = by_class[c];
        shuffle(idx, rng);
        keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class_counts[c]));
    }
    std::sort(keep.begin(), keep.end());
    return select_samples(ds, keep);
}

/// Zero-pads by `pad` pixels, crops back to H x W at (offset_y, offset_x) in
/// the padded frame, optionally mirrors horizontally. Offsets (pad, pad)
/// without flip reproduce the input.
inline std::vector<double> augment_with(std::span<const double> image, const Shape& shape, std::size_t offset_y,
                                        std::size_t offset_x, bool flip, std::size_t pad = 2) {
    if (shape.size() != 3) throw InputError("augment: image shape must be {C,H,W}");
    const std::size_t C = shape[0], H = shape[1], W = shape[2];
    if (image.size() != C * H * W) throw InputError("augment: image size does not match shape");
    if (offset_y > 2 * pad || offset_x > 2 * pad) throw InputError("augment: crop offset out of range");
    std::vector<double> out(image.size(), 0.0);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const std::size_t sx = flip ? W - 1 - x : x; // position in the cropped frame before mirroring
                const auto py = static_cast<std::ptrdiff_t>(y + offset_y) - static_cast<std::ptrdiff_t>(pad);
                const auto px = static_cast<std::ptrdiff_t>(sx + offset_x) - static_cast<std::ptrdiff_t>(pad);
                if (py < 0 || px < 0 || py >= static_cast<std::ptrdiff_t>(H) || px >= static_cast<std::ptrdiff_t>(W))
                    continue;
                out[(c * H + y) * W + x] = image[(c * H + static_cast<std::size_t>(py)) * W + static_cast<std::size_t>(px)];
            }
    return out;
}

/// Random 2-pixel padded crop plus horizontal flip with probability 0.5.
inline std::vector<double> augment(std::span<const double> image, const Shape& shape, Rng& rng,
                                   std::size_t pad = 2) {
    const std::size_t oy = uniform_index(rng, 2 * pad + 1);
    const std::size_t ox = uniform_index(rng, 2 * pad + 1);
    const bool flip = uniform01(rng) < 0.5;
    return augment_with(image, shape, oy, ox, flip, pad);
}

/// Isotropic unit-variance Gaussian classes with centres on a circle in the
/// first two coordinates, neighbouring centres `separation` apart.
inline Dataset synth_gaussian_mixture(std::size_t num_classes, std::span<const std::size_t> per_class_counts,
                                      std::size_t dim, double separation, Rng& rng) {
    if (num_classes < 2) throw InputError("synth_gaussian_mixture: need at least 2 classes");
    if (dim < 2) throw InputError("synth_gaussian_mixture: need at least 2 dimensions");
    if (per_class_counts.size() != num_classes) throw InputError("synth_gaussian_mixture: one count per class");
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(num_classes)));
    std::vector<std::pair<int, std::vector<double>>> samples;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
        for (std::size_t k = 0; k < per_class_counts[c]; ++k) {
            std::vector<double> x(dim);
            for (auto& v : x) v = noise(rng);
            x[0] += radius * std::cos(angle);
            x[1] += radius * std::sin(angle);
            samples.emplace_back(static_cast<int>(c), std::move(x));
        }
    }
    shuffle(samples, rng);
    Dataset ds;
    ds.sample_shape = {dim};
    ds.num_classes = num_classes;
    for (auto& [label, x] : samples) {
        ds.labels.push_back(label);
        ds.features.insert(ds.features.end(), x.begin(), x.end());
    }
    return ds;
}

} // namespace tavaal::data
