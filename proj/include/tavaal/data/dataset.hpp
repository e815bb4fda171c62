#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tavaal/autodiff/ndarray.hpp"
#include "tavaal/error.hpp"

namespace tavaal::data {

using ad::NdArray;
using ad::Shape;

/// Per-channel affine normalisation, (x - mean) / stddev.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Immutable labelled sample collection. Samples are stored contiguously in
/// channel-major order ({C,H,W} images or {D} vectors).
struct Dataset {
    Shape sample_shape;
    std::vector<double> features;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    std::optional<Normalization> normalization;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_size() const { return ad::shape_size(sample_shape); }

    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * sample_size(), sample_size()};
    }

    void validate() const {
        if (features.size() != labels.size() * sample_size())
            throw ConsistencyError("Dataset: feature storage does not match sample count");
        for (int l : labels)
            if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
                throw InputError("Dataset: label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes) + ")");
    }
};

/// Stacks the given samples into a [B, ...sample_shape] array.
inline NdArray gather_batch(const Dataset& ds, std::span<const std::size_t> indices) {
    Shape shape{indices.size()};
    shape.insert(shape.end(), ds.sample_shape.begin(), ds.sample_shape.end());
    NdArray out(shape);
    const std::size_t n = ds.sample_size();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= ds.size()) throw InputError("gather_batch: index out of range");
        std::copy_n(ds.features.data() + indices[k] * n, n, out.data() + k * n);
    }
    return out;
}

inline std::vector<int> gather_labels(const Dataset& ds, std::span<const std::size_t> indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(ds.labels.at(i));
    return out;
}

inline std::vector<std::size_t> class_histogram(std::span<const int> labels, std::size_t num_classes) {
    std::vector<std::size_t> h(num_classes, 0);
    for (int l : labels) ++h.at(static_cast<std::size_t>(l));
    return h;
}

/// Channel statistics of a dataset laid out as {C, ...}.
inline Normalization compute_normalization(const Dataset& ds) {
    const std::size_t C = ds.sample_shape.empty() ? 1 : ds.sample_shape[0];
    const std::size_t per = ds.sample_size() / C;
    Normalization norm{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0)};
    const double count = static_cast<double>(ds.size() * per);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t k = 0; k < per; ++k) norm.mean[c] += ds.features[(i * C + c) * per + k];
    for (auto& m : norm.mean) m /= count;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t k = 0; k < per; ++k) {
                const double d = ds.features[(i * C + c) * per + k] - norm.mean[c];
                norm.stddev[c] += d * d;
            }
    for (auto& s : norm.stddev) s = std::sqrt(s / count);
    for (auto& s : norm.stddev)
        if (s == 0) s = 1.0;
    return norm;
}

inline void apply_normalization(Dataset& ds, const Normalization& norm) {
    const std::size_t C = ds.sample_shape.empty() ? 1 : ds.sample_shape[0];
    if (norm.mean.size() != C || norm.stddev.size() != C)
        throw ConsistencyError("apply_normalization: channel count mismatch");
    const std::size_t per = ds.sample_size() / C;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t k = 0; k < per; ++k) {
                double& v = ds.features[(i * C + c) * per + k];
                v = (v - norm.mean[c]) / norm.stddev[c];
            }
    ds.normalization = norm;
}

/// Subset of samples in the given order.
inline Dataset select_samples(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.sample_shape = ds.sample_shape;
    out.num_classes = ds.num_classes;
    out.normalization = ds.normalization;
    const std::size_t n = ds.sample_size();
    out.features.reserve(indices.size() * n);
    for (std::size_t i : indices) {
        auto s = ds.sample(i);
        out.features.insert(out.features.end(), s.begin(), s.end());
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

} // namespace tavaal::data
