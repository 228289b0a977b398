#pragma once
// Typed wrappers around Tensor used at module boundaries. Internals work on
// bare tensors; these tags document what a value is and what range it obeys.

#include "uwir/core/errors.hpp"
#include "uwir/core/tensor.hpp"

namespace uwir {

enum class ValueDomain { unit_interval, unbounded_feature };

// [H, W, C] raster. unit_interval data lies in [0, 1].
struct ImagePlane {
  Tensor t;
  ValueDomain domain = ValueDomain::unit_interval;

  ImagePlane() = default;
  ImagePlane(Tensor tt, ValueDomain d) : t(std::move(tt)), domain(d) {
    if (t.rank() != 3 || t.dim(0) < 1 || t.dim(1) < 1 || t.dim(2) < 1)
      throw InvalidInput("ImagePlane requires a [H,W,C] tensor with positive dims");
  }
  int h() const { return t.dim(0); }
  int w() const { return t.dim(1); }
  int c() const { return t.dim(2); }
};

enum class PriorKind { prior_Z, condition_C, denoised_Zhat, noisy_Zt };

// Length prior_dim vector describing the degradation of one image.
struct PriorVector {
  Tensor t;
  PriorKind kind = PriorKind::prior_Z;

  PriorVector() = default;
  PriorVector(Tensor tt, PriorKind k) : t(std::move(tt)), kind(k) {
    if (t.rank() != 1) throw InvalidInput("PriorVector requires a [N] tensor");
  }
  int dim() const { return t.dim(0); }
};

enum class DepthProvenance { stub, external };

// [H, W] depth map in [0, 1], matching its paired image.
struct DepthRaster {
  Tensor t;
  DepthProvenance provenance = DepthProvenance::stub;

  DepthRaster() = default;
  DepthRaster(Tensor tt, DepthProvenance p) : t(std::move(tt)), provenance(p) {
    if (t.rank() != 2) throw InvalidInput("DepthRaster requires a [H,W] tensor");
  }
  int h() const { return t.dim(0); }
  int w() const { return t.dim(1); }
};

}  // namespace uwir
