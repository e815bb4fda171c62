#pragma once

#include <string>
#include <vector>

#include "tavaal/autodiff/ops.hpp"
#include "tavaal/error.hpp"
#include "tavaal/nn/layers.hpp"

namespace tavaal::task {

/// Loss-prediction head. Each tap goes through global average pooling (for
/// feature maps), a dense layer and ReLU; the branch outputs are
/// concatenated and mapped to one predicted loss per sample.
class Ranker {
public:
    Ranker(const std::vector<std::size_t>& tap_widths, std::size_t branch_width, Rng& rng) {
        if (tap_widths.empty()) throw InputError("Ranker: need at least one tap");
        for (std::size_t w : tap_widths) branches_.emplace_back(w, branch_width, rng);
        head_ = nn::Dense(branch_width * tap_widths.size(), 1, rng);
    }

    std::size_t tap_count() const { return branches_.size(); }

    /// Predicted losses, shape [B].
    ad::Tensor forward(const std::vector<ad::Tensor>& features) const {
        if (features.size() != branches_.size())
            throw ConfigError("Ranker: expected " + std::to_string(branches_.size()) + " taps, got " +
                              std::to_string(features.size()));
        std::vector<ad::Tensor> parts;
        parts.reserve(features.size());
        for (std::size_t i = 0; i < features.size(); ++i) {
            const ad::Tensor pooled = features[i].rank() == 4 ? ad::global_avg_pool(features[i]) : features[i];
            parts.push_back(ad::relu(branches_[i](pooled)));
        }
        ad::Tensor out = head_(ad::concat_features(parts));
        return ad::reshape(out, ad::Shape{out.dim(0)});
    }

    nn::Dense& head() { return head_; }

    ad::ParamSet params() const {
        ad::ParamSet out;
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            auto p = branches_[i].params("ranker.branch" + std::to_string(i));
            out.insert(out.end(), p.begin(), p.end());
        }
        auto h = head_.params("ranker.head");
        out.insert(out.end(), h.begin(), h.end());
        return out;
    }

private:
    std::vector<nn::Dense> branches_;
    nn::Dense head_;
};

} // namespace tavaal::task
