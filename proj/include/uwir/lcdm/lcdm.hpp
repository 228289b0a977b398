#pragma once
// Latent conditional diffusion over the prior vector. A linear alpha schedule
// drives forward noising and the T-step reverse sampler; the denoiser is a
// fully connected bottleneck predicting the injected noise from the noisy
// latent, the condition vector, and a sinusoidal step embedding. All pieces
// compose tape Vars, so a training loss may differentiate through the entire
// reverse chain.

#include <string>
#include <vector>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/params.hpp"
#include "uwir/core/config.hpp"
#include "uwir/core/rng.hpp"

namespace uwir::lcdm {

// Steps are 1-indexed: alpha(1) = cfg.alpha_1, alpha(T) = cfg.alpha_T.
struct NoiseSchedule {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  int steps() const { return static_cast<int>(alpha.size()); }
  double a(int t) const { return alpha[static_cast<std::size_t>(t - 1)]; }
  double ab(int t) const { return alpha_bar[static_cast<std::size_t>(t - 1)]; }
};

// Linear spacing from alpha_1 down to alpha_T; throws InvalidInput when the
// config step count is below 1.
NoiseSchedule make_schedule(const RunConfig& cfg);

// Registers the denoiser under "denoiser.": concat(z_t, c, emb) -> 2C -> 2C
// -> C with SiLU between layers.
void build_denoiser(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng);

// Sinusoidal embedding of step t; dim must be even.
Tensor time_embedding(int t, int dim);

ad::Var denoiser_forward(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var z_t,
                         ad::Var c, int step, int* eval_count = nullptr);

// z_t = sqrt(ab(t)) z + sqrt(1 - ab(t)) eps. Throws InvalidInput on t out of
// [1, T].
ad::Var q_sample(ad::Var z, int t, ad::Var eps, const NoiseSchedule& sched);

// One reverse step given the predicted noise; adds sqrt(1 - a(t)) * eta for
// t >= 2 (eta may be null for a deterministic step; at t = 1 it is always
// omitted).
ad::Var reverse_update(ad::Var z_t, int t, ad::Var eps_hat, const NoiseSchedule& sched,
                       const Tensor* eta);

// Full reverse chain from Gaussian noise, conditioned on c. Deterministic
// given the rng state; runs exactly T denoiser evaluations. noiseless drops
// the intermediate eta injections (the chain used by stage II training).
ad::Var sample(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var c,
               const NoiseSchedule& sched, Rng& rng, int* eval_count = nullptr,
               bool noiseless = false);

}  // namespace uwir::lcdm
