#pragma once
// Degradation prior generator. A shallow conv stem feeds a per-channel DFT;
// amplitude and phase pass through independent residual stacks, merge back to
// the spatial domain, and a conv head pools to prompt logits. The prior is
// the softmax-weighted combination of learnable prompt rows, so it always
// lies in the prompts' convex hull. Two variants share the architecture but
// not parameters: the paired one consumes (lq, gt) concatenated and pixel-
// unshuffled by 4; the lq-only one consumes the degraded image directly.

#include <string>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/params.hpp"
#include "uwir/core/config.hpp"
#include "uwir/core/rng.hpp"

namespace uwir::sfpg {

constexpr double kLreluSlope = 0.2;

struct SfpgOut {
  ad::Var prior;    // [prior_dim]
  ad::Var weights;  // softmax over prompts, [num_prompts]
};

// Paired variant under "sfpg." (stem sees 6*16 channels after unshuffle).
void build(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng);
// Lq-only variant under "sfpgstar." (3-channel stem, no unshuffle).
void build_star(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng);

// Inputs are [H,W,3]; paired requires matching sizes and H, W divisible by 4
// (throws InvalidInput otherwise).
SfpgOut forward(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var x_lq,
                ad::Var x_gt);
SfpgOut forward_star(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var x_lq);

}  // namespace uwir::sfpg
