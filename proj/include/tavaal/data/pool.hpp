#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "tavaal/data/dataset.hpp"
#include "tavaal/random.hpp"

namespace tavaal::data {

/// Labeled/unlabeled partition over a shared dataset. Both index sets are
/// kept sorted, disjoint, and together cover every sample.
class Pool {
public:
    Pool(std::shared_ptr<const Dataset> ds, std::vector<std::size_t> labeled)
        : dataset_(std::move(ds)), labeled_(std::move(labeled)) {
        std::sort(labeled_.begin(), labeled_.end());
        if (std::adjacent_find(labeled_.begin(), labeled_.end()) != labeled_.end())
            throw InputError("Pool: duplicate labeled index");
        if (!labeled_.empty() && labeled_.back() >= dataset_->size()) throw InputError("Pool: index out of range");
        unlabeled_.reserve(dataset_->size() - labeled_.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < dataset_->size(); ++i) {
            if (k < labeled_.size() && labeled_[k] == i) {
                ++k;
                continue;
            }
            unlabeled_.push_back(i);
        }
    }

    const Dataset& dataset() const { return *dataset_; }
    const std::shared_ptr<const Dataset>& dataset_ptr() const { return dataset_; }
    const std::vector<std::size_t>& labeled() const { return labeled_; }
    const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }

    /// Ground-truth labels of the labeled pool, in labeled() order.
    std::vector<int> labeled_targets() const { return gather_labels(*dataset_, labeled_); }

    bool partition_holds() const {
        std::vector<std::size_t> all;
        std::merge(labeled_.begin(), labeled_.end(), unlabeled_.begin(), unlabeled_.end(), std::back_inserter(all));
        if (all.size() != dataset_->size()) return false;
        for (std::size_t i = 0; i < all.size(); ++i)
            if (all[i] != i) return false;
        return std::is_sorted(labeled_.begin(), labeled_.end()) && std::is_sorted(unlabeled_.begin(), unlabeled_.end());
    }

private:
    std::shared_ptr<const Dataset> dataset_;
    std::vector<std::size_t> labeled_;
    std::vector<std::size_t> unlabeled_;
};

/// Uniformly random labeled seed set of `initial_count` samples.
inline Pool init_pool(std::shared_ptr<const Dataset> ds, std::size_t initial_count, Rng& rng) {
    if (initial_count > ds->size())
        throw InputError("init_pool: " + std::to_string(initial_count) + " requested from " +
                         std::to_string(ds->size()) + " samples");
    std::vector<std::size_t> all(ds->size());
    std::iota(all.begin(), all.end(), 0);
    shuffle(all, rng);
    all.resize(initial_count);
    return Pool(std::move(ds), std::move(all));
}

/// Moves `indices` from unlabeled to labeled (labels come from the dataset).
inline Pool annotate(const Pool& pool, std::span<const std::size_t> indices) {
    std::vector<std::size_t> moved(indices.begin(), indices.end());
    std::sort(moved.begin(), moved.end());
    if (std::adjacent_find(moved.begin(), moved.end()) != moved.end())
        throw InputError("annotate: duplicate index in request");
    for (std::size_t i : moved)
        if (!std::binary_search(pool.unlabeled().begin(), pool.unlabeled().end(), i))
            throw InputError("annotate: index " + std::to_string(i) + " is not in the unlabeled pool");
    std::vector<std::size_t> labeled = pool.labeled();
    labeled.insert(labeled.end(), moved.begin(), moved.end());
    return Pool(pool.dataset_ptr(), std::move(labeled));
}

} // namespace tavaal::data
