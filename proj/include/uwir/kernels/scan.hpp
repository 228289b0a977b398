#pragma once
// Selective state-space scan over one ordered sequence. Discretization is
// zero-order hold: abar = exp(delta*A), bbar = (abar-1)/A * B, with A < 0
// elementwise. h_t = abar*h_{t-1} + bbar*x_t per (channel, state);
// y_t[c] = sum_s Cseq[t,s] * h_t[c,s] + D[c] * x_t[c].
//
// Shapes: x, delta [L, C]; Bseq, Cseq [L, S]; A [C, S]; D [C]; y [L, C];
// h (saved states for backward) [L, C, S].

#include "uwir/core/tensor.hpp"

namespace uwir::kernels {

void scan_forward(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                  const Tensor& Cseq, const Tensor& A, const Tensor& D, Tensor& y,
                  Tensor& h);
void scan_forward_ref(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                      const Tensor& Cseq, const Tensor& A, const Tensor& D, Tensor& y,
                      Tensor& h);

// Accumulates (+=) into the g* buffers. h is the forward-saved state history.
void scan_backward(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                   const Tensor& Cseq, const Tensor& A, const Tensor& D, const Tensor& h,
                   const Tensor& gy, Tensor& gx, Tensor& gdelta, Tensor& gB, Tensor& gC,
                   Tensor& gA, Tensor& gD);
void scan_backward_ref(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                       const Tensor& Cseq, const Tensor& A, const Tensor& D, const Tensor& h,
                       const Tensor& gy, Tensor& gx, Tensor& gdelta, Tensor& gB, Tensor& gC,
                       Tensor& gA, Tensor& gD);

}  // namespace uwir::kernels
