#pragma once

#include "tavaal/adversary/cvae.hpp"
#include "tavaal/autodiff/losses.hpp"
#include "tavaal/random.hpp"

namespace tavaal::adversary {

/// Reconstruction + lambda * KL on one pool, with injected standard-normal noise.
inline Tensor pool_vae_term(const CondVAE& vae, const Tensor& x, const Encoding& e, const RankVariable& r,
                            double lambda, const NdArray& noise) {
    const Tensor z = ad::reparameterize(e.mu, e.logvar, noise);
    const Tensor recon = ad::mse(vae.decode(z, r), x);
    if (lambda == 0) return recon;
    return ad::add(recon, ad::scale(ad::kl_diag_gaussian(e.mu, e.logvar), lambda));
}

/// The transductive objective as a minimised loss over both pools, with
/// explicit reparameterisation noise for each.
inline Tensor vae_transductive_loss(const CondVAE& vae, const Tensor& x_l, const RankVariable& r_l, const Tensor& x_u,
                                    const RankVariable& r_u, double lambda, const NdArray& noise_l,
                                    const NdArray& noise_u) {
    if (lambda < 0) throw InputError("vae_transductive_loss: lambda must be non-negative");
    return ad::add(pool_vae_term(vae, x_l, vae.encode(x_l), r_l, lambda, noise_l),
                   pool_vae_term(vae, x_u, vae.encode(x_u), r_u, lambda, noise_u));
}

inline Tensor vae_transductive_loss(const CondVAE& vae, const Tensor& x_l, const RankVariable& r_l, const Tensor& x_u,
                                    const RankVariable& r_u, double lambda, Rng& noise_rng) {
    const Shape sl{x_l.dim(0), vae.latent_dim()}, su{x_u.dim(0), vae.latent_dim()};
    NdArray nl(sl, standard_normal(noise_rng, ad::shape_size(sl)));
    NdArray nu(su, standard_normal(noise_rng, ad::shape_size(su)));
    return vae_transductive_loss(vae, x_l, r_l, x_u, r_u, lambda, nl, nu);
}

/// -E[log D] on labeled and on unlabeled, from discriminator logits.
inline Tensor adversarial_loss_from_logits(const Tensor& logit_l, const Tensor& logit_u) {
    return ad::scale(ad::add(ad::mean(ad::log_sigmoid(logit_l)), ad::mean(ad::log_sigmoid(logit_u))), -1.0);
}

/// -E[log D] on labeled, -E[log(1 - D)] on unlabeled, from discriminator logits.
inline Tensor discriminator_loss_from_logits(const Tensor& logit_l, const Tensor& logit_u) {
    return ad::add(ad::mean(ad::softplus(ad::scale(logit_l, -1.0))), ad::mean(ad::softplus(logit_u)));
}

/// Loss that pushes the encoder to make both pools look labeled to `disc`.
/// Gradients reach the discriminator's parameters too; callers step only the VAE.
inline Tensor vae_adversarial_loss(const Discriminator& disc, const RankVariable& r_l, const Tensor& z_l,
                                   const RankVariable& r_u, const Tensor& z_u) {
    return adversarial_loss_from_logits(disc.logits(r_l, z_l), disc.logits(r_u, z_u));
}

/// Labeled-vs-unlabeled classification loss. Latents are detached here, so
/// nothing flows back into the encoder.
inline Tensor discriminator_loss(const Discriminator& disc, const RankVariable& r_l, const Tensor& z_l,
                                 const RankVariable& r_u, const Tensor& z_u) {
    return discriminator_loss_from_logits(disc.logits(r_l, ad::detach(z_l)), disc.logits(r_u, ad::detach(z_u)));
}

} // namespace tavaal::adversary
