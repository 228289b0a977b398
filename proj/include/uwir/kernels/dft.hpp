#pragma once
// Per-channel 2-D discrete Fourier transforms on [H, W, C] tensors.
// Conventions: forward is the unnormalized e^{-i} sum; inverse is the
// unnormalized e^{+i} sum (divide by H*W to invert). The fast path wraps
// FFTW; the _ref path is a direct O(N^2) evaluation kept as the test oracle.

#include "uwir/core/tensor.hpp"

namespace uwir::kernels {

// x [H,W,C] real -> re, im [H,W,C].
void dft2_forward(const Tensor& x, Tensor& re, Tensor& im);
void dft2_forward_ref(const Tensor& x, Tensor& re, Tensor& im);

// Unnormalized inverse of a complex spectrum; outputs re, im [H,W,C].
void dft2_inverse(const Tensor& re, const Tensor& im, Tensor& out_re, Tensor& out_im);
void dft2_inverse_ref(const Tensor& re, const Tensor& im, Tensor& out_re, Tensor& out_im);

}  // namespace uwir::kernels
