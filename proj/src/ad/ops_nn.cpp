#include <cassert>
#include <cmath>

#include "uwir/ad/ops.hpp"
#include "uwir/kernels/conv.hpp"

// Learned-layer ops: convolutions, fully connected, normalization, softmax.

namespace uwir::ad {
namespace {

const Tensor kEmpty;

}  // namespace

Var conv2d(Var x, Var w, Var b, int stride) {
  Tape& t = *x.tape;
  bool has_bias = b.valid();
  Tensor out;
  kernels::conv2d_forward(x.val(), w.val(), has_bias ? b.val() : kEmpty, stride, out);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, wi = w.i, bi = b.i, oi = o.i, stride, has_bias] {
    const Tensor& g = tp->grad(oi);
    kernels::conv2d_backward(tp->val(xi), tp->val(wi), stride, g, &tp->grad(xi),
                             &tp->grad(wi), has_bias ? &tp->grad(bi) : nullptr);
  });
  return o;
}

Var dwconv3(Var x, Var w) {
  Tape& t = *x.tape;
  Tensor out;
  kernels::dwconv3_forward(x.val(), w.val(), out);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, wi = w.i, oi = o.i] {
    kernels::dwconv3_backward(tp->val(xi), tp->val(wi), tp->grad(oi), &tp->grad(xi),
                              &tp->grad(wi));
  });
  return o;
}

Var linear(Var x, Var w, Var b) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  const Tensor& wv = w.val();
  assert(xv.rank() == 1 && wv.rank() == 2 && wv.dim(0) == xv.dim(0));
  int n = wv.dim(0), m = wv.dim(1);
  bool has_bias = b.valid();
  Tensor out({m});
  if (has_bias) out = b.val();
  for (int i = 0; i < n; ++i) {
    double v = xv.at1(i);
    const double* wrow = &wv.data[static_cast<std::size_t>(i) * m];
    for (int j = 0; j < m; ++j) out.at1(j) += v * wrow[j];
  }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, wi = w.i, bi = b.i, oi = o.i, n, m, has_bias] {
    const Tensor& g = tp->grad(oi);
    const Tensor& xv2 = tp->val(xi);
    const Tensor& wv2 = tp->val(wi);
    Tensor& gx = tp->grad(xi);
    Tensor& gw = tp->grad(wi);
    for (int i = 0; i < n; ++i) {
      double xvv = xv2.at1(i);
      const double* wrow = &wv2.data[static_cast<std::size_t>(i) * m];
      double* gwrow = &gw.data[static_cast<std::size_t>(i) * m];
      double acc = 0.0;
      for (int j = 0; j < m; ++j) {
        acc += g.at1(j) * wrow[j];
        gwrow[j] += xvv * g.at1(j);
      }
      gx.at1(i) += acc;
    }
    if (has_bias) {
      Tensor& gb = tp->grad(bi);
      for (int j = 0; j < m; ++j) gb.at1(j) += g.at1(j);
    }
  });
  return o;
}

Var layernorm_channel(Var x, Var gamma, Var beta, double eps) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  assert(xv.rank() == 3);
  int c = xv.dim(2);
  assert(gamma.val().dim(0) == c && beta.val().dim(0) == c);
  std::size_t pixels = xv.numel() / c;

  // Saved normalized values and inverse stddevs drive the backward pass.
  Tensor xhat(xv.shape);
  Tensor inv_std({static_cast<int>(pixels)});
  Tensor out(xv.shape);
  const Tensor& gv = gamma.val();
  const Tensor& bv = beta.val();
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* xp = &xv.data[p * c];
    double mu = 0.0;
    for (int ch = 0; ch < c; ++ch) mu += xp[ch];
    mu /= c;
    double var = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      double d = xp[ch] - mu;
      var += d * d;
    }
    var /= c;
    double is = 1.0 / std::sqrt(var + eps);
    inv_std.data[p] = is;
    for (int ch = 0; ch < c; ++ch) {
      double xh = (xp[ch] - mu) * is;
      xhat.data[p * c + ch] = xh;
      out.data[p * c + ch] = gv.at1(ch) * xh + bv.at1(ch);
    }
  }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, gi = gamma.i, bi = beta.i, oi = o.i, c, pixels,
                 xhat = std::move(xhat), inv_std = std::move(inv_std)] {
    const Tensor& g = tp->grad(oi);
    const Tensor& gv2 = tp->val(gi);
    Tensor& gx = tp->grad(xi);
    Tensor& ggamma = tp->grad(gi);
    Tensor& gbeta = tp->grad(bi);
    for (std::size_t p = 0; p < pixels; ++p) {
      const double* gp = &g.data[p * c];
      const double* xh = &xhat.data[p * c];
      double is = inv_std.data[p];
      double mean_gxh = 0.0, mean_gxh_xh = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        double gxh = gp[ch] * gv2.at1(ch);
        mean_gxh += gxh;
        mean_gxh_xh += gxh * xh[ch];
        ggamma.at1(ch) += gp[ch] * xh[ch];
        gbeta.at1(ch) += gp[ch];
      }
      mean_gxh /= c;
      mean_gxh_xh /= c;
      for (int ch = 0; ch < c; ++ch) {
        double gxh = gp[ch] * gv2.at1(ch);
        gx.data[p * c + ch] += is * (gxh - mean_gxh - xh[ch] * mean_gxh_xh);
      }
    }
  });
  return o;
}

namespace {

// Shared softmax backward: gx = y * (g - sum(g*y)) groupwise.
void softmax_group_back(const double* y, const double* g, double* gx, int n) {
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += g[i] * y[i];
  for (int i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - dot);
}

}  // namespace

Var softmax_channel(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  assert(xv.rank() == 3);
  int c = xv.dim(2);
  std::size_t pixels = xv.numel() / c;
  Tensor out(xv.shape);
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* xp = &xv.data[p * c];
    double mx = xp[0];
    for (int ch = 1; ch < c; ++ch) mx = std::max(mx, xp[ch]);
    double sum = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      double e = std::exp(xp[ch] - mx);
      out.data[p * c + ch] = e;
      sum += e;
    }
    for (int ch = 0; ch < c; ++ch) out.data[p * c + ch] /= sum;
  }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, c, pixels] {
    const Tensor& g = tp->grad(oi);
    const Tensor& y = tp->val(oi);
    Tensor& gx = tp->grad(xi);
    for (std::size_t p = 0; p < pixels; ++p)
      softmax_group_back(&y.data[p * c], &g.data[p * c], &gx.data[p * c], c);
  });
  return o;
}

Var softmax_vec(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = x.val();
  assert(xv.rank() == 1);
  int n = xv.dim(0);
  Tensor out({n});
  double mx = xv.at1(0);
  for (int i = 1; i < n; ++i) mx = std::max(mx, xv.at1(i));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double e = std::exp(xv.at1(i) - mx);
    out.at1(i) = e;
    sum += e;
  }
  for (int i = 0; i < n; ++i) out.at1(i) /= sum;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, n] {
    softmax_group_back(tp->val(oi).data.data(), tp->grad(oi).data.data(),
                       tp->grad(xi).data.data(), n);
  });
  return o;
}

}  // namespace uwir::ad
