#include <cassert>
#include <cmath>
#include <cstddef>

#include "uwir/ad/ops.hpp"

// Elementwise, reduction, broadcast, and rearrangement ops. Backward closures
// capture node indices plus whatever forward state the derivative needs.

namespace uwir::ad {
namespace {

Tape& tape_of(Var a) {
  assert(a.valid());
  return *a.tape;
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  assert(av.shape == bv.shape);
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, bi = b.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    Tensor& ga = tp->grad(ai);
    Tensor& gb = tp->grad(bi);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
  return o;
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  assert(av.shape == bv.shape);
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= bv.data[i];
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, bi = b.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    Tensor& ga = tp->grad(ai);
    Tensor& gb = tp->grad(bi);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] -= g.data[i];
    }
  });
  return o;
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  assert(av.shape == bv.shape);
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= bv.data[i];
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, bi = b.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av2 = tp->val(ai);
    const Tensor& bv2 = tp->val(bi);
    Tensor& ga = tp->grad(ai);
    Tensor& gb = tp->grad(bi);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.data[i] += g.data[i] * bv2.data[i];
      gb.data[i] += g.data[i] * av2.data[i];
    }
  });
  return o;
}

Var scale(Var a, double k) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v *= k;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i, k] {
    const Tensor& g = tp->grad(oi);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += k * g.data[i];
  });
  return o;
}

Var add_scalar(Var a, double k) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v += k;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
  });
  return o;
}

Var scale_by(Var a, Var s) {
  Tape& t = tape_of(a);
  assert(s.val().numel() == 1);
  double k = s.val().data[0];
  Tensor out = a.val();
  for (double& v : out.data) v *= k;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, si = s.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    double k2 = tp->val(si).data[0];
    Tensor& ga = tp->grad(ai);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.data[i] += k2 * g.data[i];
      acc += g.data[i] * av.data[i];
    }
    tp->grad(si).data[0] += acc;
  });
  return o;
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (av.data[i] > 0.0) ga.data[i] += g.data[i];
  });
  return o;
}

Var lrelu(Var a, double slope) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v = v > 0.0 ? v : slope * v;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i, slope] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[i] += (av.data[i] > 0.0 ? 1.0 : slope) * g.data[i];
  });
  return o;
}

Var softplus(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  // log1p(exp(x)) with the large-x branch kept linear for stability.
  for (double& v : out.data) v = v > 30.0 ? v : std::log1p(std::exp(v));
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[i] += g.data[i] / (1.0 + std::exp(-av.data[i]));
  });
  return o;
}

Var silu(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v = v / (1.0 + std::exp(-v));
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double x = av.data[i];
      double sig = 1.0 / (1.0 + std::exp(-x));
      ga.data[i] += g.data[i] * sig * (1.0 + x * (1.0 - sig));
    }
  });
  return o;
}

Var abs_val(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v = std::fabs(v);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double x = av.data[i];
      double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      ga.data[i] += s * g.data[i];
    }
  });
  return o;
}

Var neg_exp(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v = -std::exp(v);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& ov = tp->val(oi);
    Tensor& ga = tp->grad(ai);
    // d(-exp(a))/da = -exp(a) = output value.
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += ov.data[i] * g.data[i];
  });
  return o;
}

Var clip01(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.val();
  for (double& v : out.data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    const Tensor& av = tp->val(ai);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (av.data[i] >= 0.0 && av.data[i] <= 1.0) ga.data[i] += g.data[i];
  });
  return o;
}

Var mean_all(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  double acc = 0.0;
  for (double v : av.data) acc += v;
  std::size_t n = av.numel();
  Var o = t.make(Tensor({1}, {acc / static_cast<double>(n)}));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i, n] {
    double g = tp->grad(oi).data[0] / static_cast<double>(n);
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g;
  });
  return o;
}

Var sum_all(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  double acc = 0.0;
  for (double v : av.data) acc += v;
  Var o = t.make(Tensor({1}, {acc}));
  t.set_back(o, [tp = &t, ai = a.i, oi = o.i] {
    double g = tp->grad(oi).data[0];
    Tensor& ga = tp->grad(ai);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g;
  });
  return o;
}

Var l1_loss(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  assert(av.shape == bv.shape);
  double acc = 0.0;
  for (std::size_t i = 0; i < av.numel(); ++i) acc += std::fabs(av.data[i] - bv.data[i]);
  std::size_t n = av.numel();
  Var o = t.make(Tensor({1}, {acc / static_cast<double>(n)}));
  t.set_back(o, [tp = &t, ai = a.i, bi = b.i, oi = o.i, n] {
    double g = tp->grad(oi).data[0] / static_cast<double>(n);
    const Tensor& av2 = tp->val(ai);
    const Tensor& bv2 = tp->val(bi);
    Tensor& ga = tp->grad(ai);
    Tensor& gb = tp->grad(bi);
    for (std::size_t i = 0; i < av2.numel(); ++i) {
      double d = av2.data[i] - bv2.data[i];
      double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      ga.data[i] += s * g;
      gb.data[i] -= s * g;
    }
  });
  return o;
}

Var affine_channel(Var x, Var s, Var t_shift) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  const Tensor& sv = s.val();
  const Tensor& tv = t_shift.val();
  assert(xv.rank() == 3 && sv.rank() == 1 && tv.rank() == 1);
  int c = xv.dim(2);
  assert(sv.dim(0) == c && tv.dim(0) == c);
  Tensor out = xv;
  std::size_t pixels = out.numel() / c;
  for (std::size_t p = 0; p < pixels; ++p)
    for (int ch = 0; ch < c; ++ch) {
      double& v = out.data[p * c + ch];
      v = v * sv.data[ch] + tv.data[ch];
    }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, si = s.i, ti = t_shift.i, oi = o.i, c, pixels] {
    const Tensor& g = tp->grad(oi);
    const Tensor& xv2 = tp->val(xi);
    const Tensor& sv2 = tp->val(si);
    Tensor& gx = tp->grad(xi);
    Tensor& gs = tp->grad(si);
    Tensor& gt = tp->grad(ti);
    for (int ch = 0; ch < c; ++ch) {
      double gs_acc = 0.0, gt_acc = 0.0;
      for (std::size_t p = 0; p < pixels; ++p) {
        double gv = g.data[p * c + ch];
        gx.data[p * c + ch] += gv * sv2.data[ch];
        gs_acc += gv * xv2.data[p * c + ch];
        gt_acc += gv;
      }
      gs.data[ch] += gs_acc;
      gt.data[ch] += gt_acc;
    }
  });
  return o;
}

Var box_blur(Var x, int radius) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  assert(xv.rank() == 3 && radius >= 0);
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  Tensor out({h, w, c});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      int i0 = std::max(0, i - radius), i1 = std::min(h - 1, i + radius);
      int j0 = std::max(0, j - radius), j1 = std::min(w - 1, j + radius);
      double inv = 1.0 / ((i1 - i0 + 1) * (j1 - j0 + 1));
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int ii = i0; ii <= i1; ++ii)
          for (int jj = j0; jj <= j1; ++jj) acc += xv.at3(ii, jj, ch);
        out.at3(i, j, ch) = acc * inv;
      }
    }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c, radius] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        int i0 = std::max(0, i - radius), i1 = std::min(h - 1, i + radius);
        int j0 = std::max(0, j - radius), j1 = std::min(w - 1, j + radius);
        double inv = 1.0 / ((i1 - i0 + 1) * (j1 - j0 + 1));
        for (int ch = 0; ch < c; ++ch) {
          double gv = g.at3(i, j, ch) * inv;
          for (int ii = i0; ii <= i1; ++ii)
            for (int jj = j0; jj <= j1; ++jj) gx.at3(ii, jj, ch) += gv;
        }
      }
  });
  return o;
}

Var reshape(Var x, std::vector<int> shape) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  assert(Tensor::numel_of(shape) == xv.numel());
  Tensor out;
  out.shape = std::move(shape);
  out.data = xv.data;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (std::size_t k = 0; k < g.data.size(); ++k) gx.data[k] += g.data[k];
  });
  return o;
}

Var pixel_unshuffle(Var x, int r) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  assert(h % r == 0 && w % r == 0);
  int ho = h / r, wo = w / r, co = c * r * r;
  Tensor out({ho, wo, co});
  // Output channel (c*r + ki)*r + kj matches the common sub-pixel layout.
  for (int i = 0; i < ho; ++i)
    for (int j = 0; j < wo; ++j)
      for (int ch = 0; ch < c; ++ch)
        for (int ki = 0; ki < r; ++ki)
          for (int kj = 0; kj < r; ++kj)
            out.at3(i, j, (ch * r + ki) * r + kj) = xv.at3(i * r + ki, j * r + kj, ch);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, r, ho, wo, c] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j)
        for (int ch = 0; ch < c; ++ch)
          for (int ki = 0; ki < r; ++ki)
            for (int kj = 0; kj < r; ++kj)
              gx.at3(i * r + ki, j * r + kj, ch) += g.at3(i, j, (ch * r + ki) * r + kj);
  });
  return o;
}

Var pixel_shuffle(Var x, int r) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  assert(c % (r * r) == 0);
  int co = c / (r * r);
  Tensor out({h * r, w * r, co});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int ch = 0; ch < co; ++ch)
        for (int ki = 0; ki < r; ++ki)
          for (int kj = 0; kj < r; ++kj)
            out.at3(i * r + ki, j * r + kj, ch) = xv.at3(i, j, (ch * r + ki) * r + kj);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, r, h, w, co] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = 0; ch < co; ++ch)
          for (int ki = 0; ki < r; ++ki)
            for (int kj = 0; kj < r; ++kj)
              gx.at3(i, j, (ch * r + ki) * r + kj) += g.at3(i * r + ki, j * r + kj, ch);
  });
  return o;
}

Var avgpool2(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  assert(h % 2 == 0 && w % 2 == 0);
  Tensor out({h / 2, w / 2, c});
  for (int i = 0; i < h / 2; ++i)
    for (int j = 0; j < w / 2; ++j)
      for (int ch = 0; ch < c; ++ch)
        out.at3(i, j, ch) = 0.25 * (xv.at3(2 * i, 2 * j, ch) + xv.at3(2 * i, 2 * j + 1, ch) +
                                    xv.at3(2 * i + 1, 2 * j, ch) +
                                    xv.at3(2 * i + 1, 2 * j + 1, ch));
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < h / 2; ++i)
      for (int j = 0; j < w / 2; ++j)
        for (int ch = 0; ch < c; ++ch) {
          double gv = 0.25 * g.at3(i, j, ch);
          gx.at3(2 * i, 2 * j, ch) += gv;
          gx.at3(2 * i, 2 * j + 1, ch) += gv;
          gx.at3(2 * i + 1, 2 * j, ch) += gv;
          gx.at3(2 * i + 1, 2 * j + 1, ch) += gv;
        }
  });
  return o;
}

Var upsample_nearest2(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  Tensor out({h * 2, w * 2, c});
  for (int i = 0; i < 2 * h; ++i)
    for (int j = 0; j < 2 * w; ++j)
      for (int ch = 0; ch < c; ++ch) out.at3(i, j, ch) = xv.at3(i / 2, j / 2, ch);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < 2 * h; ++i)
      for (int j = 0; j < 2 * w; ++j)
        for (int ch = 0; ch < c; ++ch) gx.at3(i / 2, j / 2, ch) += g.at3(i, j, ch);
  });
  return o;
}

Var concat_c(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  assert(av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0) && av.dim(1) == bv.dim(1));
  int h = av.dim(0), w = av.dim(1), ca = av.dim(2), cb = bv.dim(2);
  Tensor out({h, w, ca + cb});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      for (int ch = 0; ch < ca; ++ch) out.at3(i, j, ch) = av.at3(i, j, ch);
      for (int ch = 0; ch < cb; ++ch) out.at3(i, j, ca + ch) = bv.at3(i, j, ch);
    }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, ai = a.i, bi = b.i, oi = o.i, h, w, ca, cb] {
    const Tensor& g = tp->grad(oi);
    Tensor& ga = tp->grad(ai);
    Tensor& gb = tp->grad(bi);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        for (int ch = 0; ch < ca; ++ch) ga.at3(i, j, ch) += g.at3(i, j, ch);
        for (int ch = 0; ch < cb; ++ch) gb.at3(i, j, ch) += g.at3(i, j, ca + ch);
      }
  });
  return o;
}

Var slice_c(Var x, int c0, int c1) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  assert(0 <= c0 && c0 < c1 && c1 <= xv.dim(2));
  int h = xv.dim(0), w = xv.dim(1);
  Tensor out({h, w, c1 - c0});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int ch = c0; ch < c1; ++ch) out.at3(i, j, ch - c0) = xv.at3(i, j, ch);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c0, c1] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = c0; ch < c1; ++ch) gx.at3(i, j, ch) += g.at3(i, j, ch - c0);
  });
  return o;
}

Var gap(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  Tensor out({c});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int ch = 0; ch < c; ++ch) out.at1(ch) += xv.at3(i, j, ch);
  double inv = 1.0 / (static_cast<double>(h) * w);
  for (double& v : out.data) v *= inv;
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c, inv] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = 0; ch < c; ++ch) gx.at3(i, j, ch) += g.at1(ch) * inv;
  });
  return o;
}

Var forward_diff_h(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  assert(w >= 2);
  Tensor out({h, w - 1, c});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j + 1 < w; ++j)
      for (int ch = 0; ch < c; ++ch)
        out.at3(i, j, ch) = xv.at3(i, j + 1, ch) - xv.at3(i, j, ch);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j + 1 < w; ++j)
        for (int ch = 0; ch < c; ++ch) {
          double gv = g.at3(i, j, ch);
          gx.at3(i, j + 1, ch) += gv;
          gx.at3(i, j, ch) -= gv;
        }
  });
  return o;
}

Var forward_diff_v(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  assert(h >= 2);
  Tensor out({h - 1, w, c});
  for (int i = 0; i + 1 < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int ch = 0; ch < c; ++ch)
        out.at3(i, j, ch) = xv.at3(i + 1, j, ch) - xv.at3(i, j, ch);
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, h, w, c] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int i = 0; i + 1 < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = 0; ch < c; ++ch) {
          double gv = g.at3(i, j, ch);
          gx.at3(i + 1, j, ch) += gv;
          gx.at3(i, j, ch) -= gv;
        }
  });
  return o;
}

namespace {

// dir 0: row-major; 1: row-major reversed; 2: column-major; 3: reversed.
inline std::size_t scan_source(int t, int dir, int h, int w) {
  int l = h * w;
  int u = (dir == 1 || dir == 3) ? l - 1 - t : t;
  int i, j;
  if (dir < 2) {
    i = u / w;
    j = u % w;
  } else {
    j = u / h;
    i = u % h;
  }
  return static_cast<std::size_t>(i) * w + j;
}

}  // namespace

Var reorder_scan(Var x, int dir) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.val();
  int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  int l = h * w;
  Tensor out({l, c});
  for (int tt = 0; tt < l; ++tt) {
    std::size_t src = scan_source(tt, dir, h, w) * c;
    for (int ch = 0; ch < c; ++ch)
      out.data[static_cast<std::size_t>(tt) * c + ch] = xv.data[src + ch];
  }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, xi = x.i, oi = o.i, dir, h, w, c, l] {
    const Tensor& g = tp->grad(oi);
    Tensor& gx = tp->grad(xi);
    for (int tt = 0; tt < l; ++tt) {
      std::size_t src = scan_source(tt, dir, h, w) * c;
      for (int ch = 0; ch < c; ++ch)
        gx.data[src + ch] += g.data[static_cast<std::size_t>(tt) * c + ch];
    }
  });
  return o;
}

Var inverse_reorder(Var seq, int dir, int h, int w) {
  Tape& t = tape_of(seq);
  const Tensor& sv = seq.val();
  int l = sv.dim(0), c = sv.dim(1);
  assert(l == h * w);
  Tensor out({h, w, c});
  for (int tt = 0; tt < l; ++tt) {
    std::size_t dst = scan_source(tt, dir, h, w) * c;
    for (int ch = 0; ch < c; ++ch)
      out.data[dst + ch] = sv.data[static_cast<std::size_t>(tt) * c + ch];
  }
  Var o = t.make(std::move(out));
  t.set_back(o, [tp = &t, si = seq.i, oi = o.i, dir, h, w, c, l] {
    const Tensor& g = tp->grad(oi);
    Tensor& gs = tp->grad(si);
    for (int tt = 0; tt < l; ++tt) {
      std::size_t dst = scan_source(tt, dir, h, w) * c;
      for (int ch = 0; ch < c; ++ch)
        gs.data[static_cast<std::size_t>(tt) * c + ch] += g.data[dst + ch];
    }
  });
  return o;
}

}  // namespace uwir::ad
