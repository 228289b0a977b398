#pragma once
// Depth rasters for the restoration pipeline. The stub provider is a cheap
// differentiable surrogate (smoothed inverse luminance); the external
// provider shells out to a monocular-depth command per image, exchanging
// PNGs. Rasters are [H, W] in [0, 1].

#include <string>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/tape.hpp"
#include "uwir/core/tensor.hpp"

namespace uwir::depth {

struct DepthProviderSpec {
  enum class Mode { stub, external };
  Mode mode = Mode::stub;
  std::string external_command;  // invoked as: <cmd> <in.png> <out.png>
  bool differentiable = true;

  // Throws InvalidInput: external mode needs a command; the stub is always
  // differentiable.
  void validate() const;
};

// Differentiable stub path: [H,W,3] image Var in [0,1] -> [H,W,1] raster Var.
// Depth is the radius-2 box blur of (1 - luminance), border windows clipped.
ad::Var predict_depth_stub(ad::Tape& t, ad::Var img);

// Plain-tensor provider entry: [H,W,3] -> [H,W]. Stub mode evaluates the
// differentiable path on a throwaway tape, so both paths agree bit for bit.
// External mode writes the image, runs the command, and reads back a 16-bit
// grayscale PNG normalized to [0,1]; failures raise ProviderError carrying
// the command's diagnostics.
Tensor predict_depth(const Tensor& img, const DepthProviderSpec& spec);

// Affine min->0, max->1 rescale; a constant raster maps to 0.5 everywhere.
// Throws InvalidInput on non-finite values.
Tensor normalize_depth(const Tensor& raw);

// 2x2 average pooling applied `level` times; level in {0,1,2,3} and the size
// must be divisible by 2^level (throws InvalidInput otherwise).
Tensor downsample_depth(const Tensor& d, int level);

}  // namespace uwir::depth
