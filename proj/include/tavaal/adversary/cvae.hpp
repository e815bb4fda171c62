#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "tavaal/autodiff/losses.hpp"
#include "tavaal/error.hpp"
#include "tavaal/nn/layers.hpp"

namespace tavaal::adversary {

using ad::NdArray;
using ad::ParamSet;
using ad::Shape;
using ad::Tensor;

/// Per-sample conditioning scalar in [0, 1] derived from predicted-loss ranks.
struct RankVariable {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    /// Column tensor [n x 1], outside the graph.
    Tensor column() const { return ad::constant(NdArray(Shape{values.size(), 1}, values)); }

    RankVariable slice(std::size_t begin, std::size_t end) const {
        return {std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(begin),
                                    values.begin() + static_cast<std::ptrdiff_t>(end))};
    }
};

/// Ascending rank scaled to [0, 1]: r_k = rank(l_k) / (n - 1). Tied values
/// share their average rank; n = 1 gives 0.
inline RankVariable normalize_ranks(std::span<const double> predicted) {
    const std::size_t n = predicted.size();
    if (n == 0) throw InputError("normalize_ranks: empty input");
    RankVariable out{std::vector<double>(n, 0.0)};
    if (n == 1) return out;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predicted[a] < predicted[b]; });
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && predicted[order[j + 1]] == predicted[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) / denom;
        for (std::size_t k = i; k <= j; ++k) out.values[order[k]] = r;
        i = j + 1;
    }
    return out;
}

struct CondVaeConfig {
    Shape input_shape; // per-sample shape; flattened internally
    std::size_t hidden = 128;
    std::size_t latent = 16;
    /// Decoder sees concat(z, r). Off for plain VAAL.
    bool rank_conditioned = true;
};

struct Encoding {
    Tensor mu;     // [B x d]
    Tensor logvar; // [B x d]
};

/// Gaussian-encoder autoencoder whose decoder can be conditioned on a rank
/// variable. The encoder never sees r.
class CondVAE {
public:
    CondVAE(CondVaeConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
        in_ = ad::shape_size(cfg_.input_shape);
        if (in_ == 0 || cfg_.latent == 0) throw InputError("CondVAE: empty input or latent size");
        const std::size_t h = cfg_.hidden, d = cfg_.latent;
        enc1_ = nn::Dense(in_, h, rng);
        enc2_ = nn::Dense(h, h, rng);
        enc_mu_ = nn::Dense(h, d, rng);
        enc_logvar_ = nn::Dense(h, d, rng);
        dec1_ = nn::Dense(d + (cfg_.rank_conditioned ? 1 : 0), h, rng);
        dec2_ = nn::Dense(h, h, rng);
        dec_out_ = nn::Dense(h, in_, rng);
    }

    const CondVaeConfig& config() const { return cfg_; }
    std::size_t latent_dim() const { return cfg_.latent; }

    Encoding encode(const Tensor& x) const {
        const Shape& s = x.shape();
        if (s.size() != cfg_.input_shape.size() + 1 || !std::equal(s.begin() + 1, s.end(), cfg_.input_shape.begin()))
            throw InputError("CondVAE::encode: batch shape " + ad::shape_str(s) + " does not match input " +
                             ad::shape_str(cfg_.input_shape));
        Tensor h = ad::relu(enc2_(ad::relu(enc1_(ad::flatten(x)))));
        return {enc_mu_(h), enc_logvar_(h)};
    }

    /// Reconstruction with the input's per-sample shape.
    Tensor decode(const Tensor& z, const RankVariable& r) const {
        if (z.rank() != 2 || z.dim(1) != cfg_.latent) throw InputError("CondVAE::decode: bad latent shape");
        Tensor in = z;
        if (cfg_.rank_conditioned) {
            if (r.size() != z.dim(0)) throw InputError("CondVAE::decode: rank count does not match batch");
            in = ad::concat_features({z, r.column()});
        }
        Tensor out = dec_out_(ad::relu(dec2_(ad::relu(dec1_(in)))));
        Shape shape{z.dim(0)};
        shape.insert(shape.end(), cfg_.input_shape.begin(), cfg_.input_shape.end());
        return ad::reshape(out, shape);
    }

    ParamSet encoder_params() const {
        return ad::concat_params({enc1_.params("vae.enc1"), enc2_.params("vae.enc2"), enc_mu_.params("vae.enc_mu"),
                                  enc_logvar_.params("vae.enc_logvar")});
    }
    ParamSet decoder_params() const {
        return ad::concat_params({dec1_.params("vae.dec1"), dec2_.params("vae.dec2"), dec_out_.params("vae.dec_out")});
    }
    ParamSet params() const { return ad::concat_params({encoder_params(), decoder_params()}); }

private:
    CondVaeConfig cfg_;
    std::size_t in_ = 0;
    nn::Dense enc1_, enc2_, enc_mu_, enc_logvar_;
    nn::Dense dec1_, dec2_, dec_out_;
};

struct DiscriminatorConfig {
    std::size_t latent = 16;
    std::size_t hidden = 64;
    bool rank_conditioned = true;
};

/// Five dense layers on concat(r, z) (or z alone), sigmoid head.
/// Output near 1 means "from the labeled pool".
class Discriminator {
public:
    Discriminator(DiscriminatorConfig cfg, Rng& rng) : cfg_(cfg) {
        const std::size_t in = cfg_.latent + (cfg_.rank_conditioned ? 1 : 0);
        layers_.emplace_back(in, cfg_.hidden, rng);
        for (int i = 0; i < 3; ++i) layers_.emplace_back(cfg_.hidden, cfg_.hidden, rng);
        layers_.emplace_back(cfg_.hidden, 1, rng);
    }

    const DiscriminatorConfig& config() const { return cfg_; }

    /// Logits, shape [B]; probabilities are sigmoid(logits).
    Tensor logits(const RankVariable& r, const Tensor& z) const {
        if (z.rank() != 2 || z.dim(1) != cfg_.latent) throw InputError("Discriminator: bad latent shape");
        Tensor h = z;
        if (cfg_.rank_conditioned) {
            if (r.size() != z.dim(0)) throw InputError("Discriminator: rank count does not match batch");
            h = ad::concat_features({r.column(), z});
        }
        for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = ad::relu(layers_[i](h));
        h = layers_.back()(h);
        return ad::reshape(h, Shape{h.dim(0)});
    }

    Tensor probability(const RankVariable& r, const Tensor& z) const { return ad::sigmoid(logits(r, z)); }

    nn::Dense& output_layer() { return layers_.back(); }

    ParamSet params() const {
        ParamSet out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            auto p = layers_[i].params("disc.fc" + std::to_string(i + 1));
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }

private:
    DiscriminatorConfig cfg_;
    std::vector<nn::Dense> layers_;
};

} // namespace tavaal::adversary
