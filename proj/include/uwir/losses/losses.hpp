#pragma once
// Training objectives: pixel L1, edge-aware depth loss with a forward
// difference gradient term, diffusion prior L1, and the stage totals. All
// terms are mean reductions, so the weights are scale free across image
// sizes. |.| uses subgradient 0 at 0.

#include <map>
#include <string>

#include "uwir/ad/ops.hpp"
#include "uwir/ad/tape.hpp"
#include "uwir/core/tensor.hpp"

namespace uwir::losses {

// Per-iteration loss breakdown. `total` always equals the weighted sum of
// the reported components, recomputed with the same arithmetic as the
// training graph.
struct LossReport {
  double total = 0.0;
  std::map<std::string, double> components;  // l1, depth_l1, depth_grad, diff
};

// Mean absolute difference. Throws InvalidInput on shape mismatch.
ad::Var l1(ad::Var a, ad::Var b);

// mean|d_x e| + mean|d_y e| for e = d1 - d2, forward differences with the
// last column / row excluded per axis. Accepts [H,W] or [H,W,C] with H,W >= 2;
// throws InvalidInput otherwise. Constant shifts of either argument cancel.
ad::Var grad_term(ad::Var d1, ad::Var d2);

// l1(d1, d2) + lambda2 * grad_term(d1, d2).
ad::Var depth_term(ad::Var d1, ad::Var d2, double lambda2);

// A stage objective: the Var drives backward(), the report gets logged.
struct StageLoss {
  ad::Var objective;
  LossReport report;
};

// Stage one: L1(x_hat, x_gt) + lambda1 * depth_term(d_pseudo, d_hq, lambda2).
// Pass depth rasters as tape constants to keep the depth term out of the
// gradient (a non-differentiable provider); the term is still evaluated and
// reported.
StageLoss stage1(ad::Var x_hat, ad::Var x_gt, ad::Var d_pseudo, ad::Var d_hq, double lambda1,
                 double lambda2);

// Stage two: L1(x_hat, x_gt) + L1(z, z_hat), unit weights.
StageLoss stage2(ad::Var x_hat, ad::Var x_gt, ad::Var z, ad::Var z_hat);

// Plain-tensor entry points; each evaluates the matching graph on a
// throwaway tape, so logged numbers agree with the training path bit for
// bit.
double l1_loss(const Tensor& a, const Tensor& b);
double grad_loss(const Tensor& d1, const Tensor& d2);
double depth_loss(const Tensor& d_pseudo, const Tensor& d_hq, double lambda2);

}  // namespace uwir::losses
