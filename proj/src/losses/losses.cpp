#include "uwir/losses/losses.hpp"

#include "uwir/core/errors.hpp"

namespace uwir::losses {

ad::Var l1(ad::Var a, ad::Var b) {
  if (a.val().shape != b.val().shape) throw InvalidInput("l1: shape mismatch");
  return ad::l1_loss(a, b);
}

ad::Var grad_term(ad::Var d1, ad::Var d2) {
  // Copy shape facts out first: val() references tape-owned storage that
  // moves as ops append nodes.
  if (d1.val().shape != d2.val().shape) throw InvalidInput("grad_term: shape mismatch");
  int rank = d1.val().rank();
  if (rank != 2 && rank != 3) throw InvalidInput("grad_term: expects [H,W] or [H,W,C]");
  int h = d1.val().dim(0), w = d1.val().dim(1);
  if (h < 2 || w < 2) throw InvalidInput("grad_term: needs at least 2x2");
  ad::Var e = ad::sub(d1, d2);
  if (rank == 2) e = ad::reshape(e, {h, w, 1});
  ad::Var gx = ad::mean_all(ad::abs_val(ad::forward_diff_h(e)));
  ad::Var gy = ad::mean_all(ad::abs_val(ad::forward_diff_v(e)));
  return ad::add(gx, gy);
}

ad::Var depth_term(ad::Var d1, ad::Var d2, double lambda2) {
  return ad::add(l1(d1, d2), ad::scale(grad_term(d1, d2), lambda2));
}

StageLoss stage1(ad::Var x_hat, ad::Var x_gt, ad::Var d_pseudo, ad::Var d_hq, double lambda1,
                 double lambda2) {
  ad::Var pix = l1(x_hat, x_gt);
  ad::Var dl1 = l1(d_pseudo, d_hq);
  ad::Var dgr = grad_term(d_pseudo, d_hq);
  // Same association as the report recomputation below.
  ad::Var depth = ad::add(dl1, ad::scale(dgr, lambda2));
  ad::Var total = ad::add(pix, ad::scale(depth, lambda1));
  StageLoss out{total, {}};
  out.report.components["l1"] = pix.val().data[0];
  out.report.components["depth_l1"] = dl1.val().data[0];
  out.report.components["depth_grad"] = dgr.val().data[0];
  out.report.total = total.val().data[0];
  return out;
}

StageLoss stage2(ad::Var x_hat, ad::Var x_gt, ad::Var z, ad::Var z_hat) {
  ad::Var pix = l1(x_hat, x_gt);
  ad::Var diff = l1(z, z_hat);
  ad::Var total = ad::add(pix, diff);
  StageLoss out{total, {}};
  out.report.components["l1"] = pix.val().data[0];
  out.report.components["diff"] = diff.val().data[0];
  out.report.total = total.val().data[0];
  return out;
}

double l1_loss(const Tensor& a, const Tensor& b) {
  ad::Tape t;
  return l1(t.constant(a), t.constant(b)).val().data[0];
}

double grad_loss(const Tensor& d1, const Tensor& d2) {
  ad::Tape t;
  return grad_term(t.constant(d1), t.constant(d2)).val().data[0];
}

double depth_loss(const Tensor& d_pseudo, const Tensor& d_hq, double lambda2) {
  ad::Tape t;
  return depth_term(t.constant(d_pseudo), t.constant(d_hq), lambda2).val().data[0];
}

}  // namespace uwir::losses
