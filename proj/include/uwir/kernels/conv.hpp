#pragma once
// Convolution kernels on channel-last [H, W, C] tensors. Weights are
// [k, k, Cin, Cout] (depthwise: [3, 3, C]); padding is zero, (k-1)/2 per side,
// k in {1, 3}, stride in {1, 2}. Every function has an OpenMP path and a
// serial reference (_ref) with identical accumulation order; tests hold them
// bit-equal and the benchmark times them against each other.

#include "uwir/core/tensor.hpp"

namespace uwir::kernels {

// out gets (H + 2p - k)/stride + 1 per spatial dim.
void conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
                    Tensor& out);
void conv2d_forward_ref(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
                        Tensor& out);

// Accumulates (+=) into the gradient buffers; callers zero them beforehand.
// Any of gin/gw/gb may be null to skip that term.
void conv2d_backward(const Tensor& in, const Tensor& w, int stride, const Tensor& gout,
                     Tensor* gin, Tensor* gw, Tensor* gb);
void conv2d_backward_ref(const Tensor& in, const Tensor& w, int stride, const Tensor& gout,
                         Tensor* gin, Tensor* gw, Tensor* gb);

// Depthwise 3x3, stride 1, zero pad 1.
void dwconv3_forward(const Tensor& in, const Tensor& w, Tensor& out);
void dwconv3_forward_ref(const Tensor& in, const Tensor& w, Tensor& out);
void dwconv3_backward(const Tensor& in, const Tensor& w, const Tensor& gout, Tensor* gin,
                      Tensor* gw);
void dwconv3_backward_ref(const Tensor& in, const Tensor& w, const Tensor& gout, Tensor* gin,
                          Tensor* gw);

}  // namespace uwir::kernels
