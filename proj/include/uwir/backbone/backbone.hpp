#pragma once
// Restoration backbone: a 4-level U-shaped encoder-decoder of mixer blocks.
// Each block layer-norms its input, modulates it with the degradation prior,
// mixes globally with the state-space module, gates the result by a channel
// softmax lifted from the depth raster, modulates again and runs the expert
// FFN; both mixer and FFN sit on residual connections. The network output is
// a zero-initialized head added onto the input (global residual), clipped to
// [0,1], so a fresh model is the identity.

#include <string>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/params.hpp"
#include "uwir/core/config.hpp"
#include "uwir/core/rng.hpp"
#include "uwir/wmoe/wmoe.hpp"

namespace uwir::backbone {

// Registers every backbone parameter under "backbone.".
void build(ad::ParamStore& ps, const RunConfig& cfg, Rng& rng);

// Per-block pieces, exposed for tests. prefix names one block, e.g.
// "backbone.enc0.b0.".
void build_block(ad::ParamStore& ps, const std::string& prefix, int width,
                 const RunConfig& cfg, Rng& rng);
// x [H,W,C] * scale(z) + shift(z); z has length cfg.prior_dim.
ad::Var prior_modulate(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var x,
                       ad::Var z);
// LN(f) gated by a per-pixel channel softmax of relu(conv3x3(depth)).
ad::Var depth_gate(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var f,
                   ad::Var depth);
ad::Var mmoeb_forward(ad::Tape& t, ad::ParamStore& ps, const std::string& prefix, ad::Var f,
                      ad::Var z, ad::Var depth, const RunConfig& cfg, bool train_mode,
                      wmoe::ExpertHistogram* hist = nullptr);

// Full restoration pass. x_lq is [H,W,3] in [0,1] with H, W divisible by 8
// (throws InvalidInput otherwise), z is the prior vector [prior_dim], depth
// is [H,W,1]. Output is [H,W,3] clipped to [0,1].
ad::Var restore(ad::Tape& t, ad::ParamStore& ps, const RunConfig& cfg, ad::Var x_lq, ad::Var z,
                ad::Var depth, bool train_mode, wmoe::ExpertHistogram* hist = nullptr);

}  // namespace uwir::backbone
