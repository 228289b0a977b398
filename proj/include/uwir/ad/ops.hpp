#pragma once
// Differentiable op catalog. Image ops take [H, W, C]; vector ops take [N];
// scalars are [1]. Every op appends nodes to the tape bound to its inputs and
// returns a handle to the result. Gradients accumulate, so a Var may feed any
// number of consumers.

#include <utility>
#include <vector>

#include "uwir/ad/tape.hpp"

namespace uwir::ad {

// Elementwise, shapes must match.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

// Elementwise with immediate scalars.
Var scale(Var a, double k);
Var add_scalar(Var a, double k);

// Multiply by a [1] scalar variable.
Var scale_by(Var a, Var s);

// Activations and pointwise maps.
Var relu(Var a);
Var lrelu(Var a, double slope);
Var softplus(Var a);
Var silu(Var a);
Var abs_val(Var a);
// Negative exponential map used for state matrices: -exp(a).
Var neg_exp(Var a);
// Clamp to [0,1]; gradient passes where the input lies inside the interval.
Var clip01(Var a);

// Reductions to [1].
Var mean_all(Var a);
Var sum_all(Var a);
// Mean absolute difference of two same-shaped tensors.
Var l1_loss(Var a, Var b);

// Channel broadcast over [H, W, C]: x * s + t with s, t of shape [C].
Var affine_channel(Var x, Var s, Var t);

// Per-pixel normalization over the channel axis, learned gain/bias [C].
Var layernorm_channel(Var x, Var gamma, Var beta, double eps = 1e-6);

// Per-pixel softmax over the channel axis.
Var softmax_channel(Var x);
// Softmax over a [N] vector.
Var softmax_vec(Var x);

// Convolutions; w is [k, k, Cin, Cout], optional bias [Cout] (pass Var{} to
// omit), zero padding (k-1)/2, stride 1 or 2.
Var conv2d(Var x, Var w, Var b, int stride = 1);
// Depthwise 3x3, w is [3, 3, C].
Var dwconv3(Var x, Var w);

// Fully connected on a [N] vector; w is [N, M], optional bias [M].
Var linear(Var x, Var w, Var b);

// Spatial rearrangements.
// Same data in a new shape (row-major order preserved; numel must match).
Var reshape(Var x, std::vector<int> shape);
Var pixel_unshuffle(Var x, int r);
Var pixel_shuffle(Var x, int r);
Var avgpool2(Var x);
Var upsample_nearest2(Var x);
Var concat_c(Var a, Var b);
Var slice_c(Var x, int c0, int c1);
// Mean over all pixels, result [C].
Var gap(Var x);
// Uniform window mean of side 2*radius+1 per channel; windows are clipped at
// the borders and normalized by the in-bounds count.
Var box_blur(Var x, int radius);
// Forward differences along width / height; output loses one column / row.
Var forward_diff_h(Var x);
Var forward_diff_v(Var x);

// Spectrum split and merge. fft_split returns (amplitude, phase) of the
// per-channel 2-D DFT; phase of an exactly-zero bin is 0. ifft_merge inverts
// amplitude/phase back to the spatial image (real part of the normalized
// inverse transform).
std::pair<Var, Var> fft_split(Var x);
Var ifft_merge(Var amp, Var pha);

// Scan-order flattening: dir 0 row-major, 1 row-major reversed, 2
// column-major, 3 column-major reversed. [H,W,C] <-> [H*W, C].
Var reorder_scan(Var x, int dir);
Var inverse_reorder(Var seq, int dir, int h, int w);

// Selective state-space scan (see kernels/scan.hpp for the recurrence).
Var selective_scan(Var x, Var delta, Var Bseq, Var Cseq, Var A, Var D);

}  // namespace uwir::ad
