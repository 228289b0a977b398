#pragma once
// Vision state-space mixer: four directional selective scans over the token
// grid (row/column order, forward/backward), averaged and projected back to
// the channel width. Delta/B/C projections are input dependent and learned
// per direction; A is diagonal negative real, D a per-channel skip gain.

#include <string>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/params.hpp"
#include "uwir/core/rng.hpp"

namespace uwir::vssm {

struct VssmSpec {
  int channels = 0;
  int d_state = 16;
};

// Registers parameters under prefix. The output projection starts at zero so
// a fresh module contributes nothing to a residual branch.
void build(ad::ParamStore& ps, const std::string& prefix, const VssmSpec& spec, Rng& rng);

// x is [H, W, C]; output has the same shape.
ad::Var forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var x,
                const VssmSpec& spec);

}  // namespace uwir::vssm
