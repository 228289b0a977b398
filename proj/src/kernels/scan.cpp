#include "uwir/kernels/scan.hpp"

#include <cassert>
#include <cmath>

#include "uwir/kernels/parallel.hpp"

namespace uwir::kernels {
namespace {

struct ScanDims {
  int l, c, s;
};

ScanDims dims_of(const Tensor& x, const Tensor& Bseq, const Tensor& A) {
  ScanDims d;
  d.l = x.dim(0);
  d.c = x.dim(1);
  d.s = Bseq.dim(1);
  assert(Bseq.dim(0) == d.l && A.dim(0) == d.c && A.dim(1) == d.s);
  return d;
}

}  // namespace

void scan_forward(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                  const Tensor& Cseq, const Tensor& A, const Tensor& D, Tensor& y,
                  Tensor& h) {
  ScanDims d = dims_of(x, Bseq, A);
  y = Tensor({d.l, d.c});
  h = Tensor({d.l, d.c, d.s});
  // The recurrence is sequential in t; channels are independent.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int c = 0; c < d.c; ++c) {
    const double* Ac = &A.data[static_cast<std::size_t>(c) * d.s];
    double Dc = D.at1(c);
    for (int t = 0; t < d.l; ++t) {
      double xv = x.at2(t, c);
      double dl = delta.at2(t, c);
      const double* Bt = &Bseq.data[static_cast<std::size_t>(t) * d.s];
      const double* Ct = &Cseq.data[static_cast<std::size_t>(t) * d.s];
      const double* hprev =
          t > 0 ? &h.data[((static_cast<std::size_t>(t) - 1) * d.c + c) * d.s] : nullptr;
      double* ht = &h.data[(static_cast<std::size_t>(t) * d.c + c) * d.s];
      double acc = Dc * xv;
      for (int s = 0; s < d.s; ++s) {
        double a = Ac[s];
        double ab = std::exp(dl * a);
        double bb = (ab - 1.0) / a * Bt[s];
        double hv = (hprev ? ab * hprev[s] : 0.0) + bb * xv;
        ht[s] = hv;
        acc += Ct[s] * hv;
      }
      y.at2(t, c) = acc;
    }
  }
}

void scan_forward_ref(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                      const Tensor& Cseq, const Tensor& A, const Tensor& D, Tensor& y,
                      Tensor& h) {
  ScanDims d = dims_of(x, Bseq, A);
  y = Tensor({d.l, d.c});
  h = Tensor({d.l, d.c, d.s});
  for (int c = 0; c < d.c; ++c)
    for (int t = 0; t < d.l; ++t) {
      // Same per-element accumulation order as the parallel path: D-term
      // first, then states in ascending order.
      double acc = D.at1(c) * x.at2(t, c);
      for (int s = 0; s < d.s; ++s) {
        double a = A.data[static_cast<std::size_t>(c) * d.s + s];
        double ab = std::exp(delta.at2(t, c) * a);
        double bb = (ab - 1.0) / a * Bseq.at2(t, s);
        double prev = t > 0 ? h.data[((static_cast<std::size_t>(t) - 1) * d.c + c) * d.s + s]
                            : 0.0;
        double hv = ab * prev + bb * x.at2(t, c);
        h.data[(static_cast<std::size_t>(t) * d.c + c) * d.s + s] = hv;
        acc += Cseq.at2(t, s) * hv;
      }
      y.at2(t, c) = acc;
    }
}

void scan_backward(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                   const Tensor& Cseq, const Tensor& A, const Tensor& D, const Tensor& h,
                   const Tensor& gy, Tensor& gx, Tensor& gdelta, Tensor& gB, Tensor& gC,
                   Tensor& gA, Tensor& gD) {
  ScanDims d = dims_of(x, Bseq, A);
  Tensor gh({d.l, d.c, d.s});

  // Phase 1: everything that is independent per channel. gh[t] solves the
  // reverse recurrence gh[t] = gy[t]*C[t] + abar(t+1)*gh[t+1].
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int c = 0; c < d.c; ++c) {
    const double* Ac = &A.data[static_cast<std::size_t>(c) * d.s];
    double gD_acc = 0.0;
    for (int t = 0; t < d.l; ++t) gD_acc += gy.at2(t, c) * x.at2(t, c);
    gD.at1(c) += gD_acc;

    for (int t = d.l - 1; t >= 0; --t) {
      double gyv = gy.at2(t, c);
      double dl = delta.at2(t, c);
      double xv = x.at2(t, c);
      const double* Bt = &Bseq.data[static_cast<std::size_t>(t) * d.s];
      const double* Ct = &Cseq.data[static_cast<std::size_t>(t) * d.s];
      const double* hprev =
          t > 0 ? &h.data[((static_cast<std::size_t>(t) - 1) * d.c + c) * d.s] : nullptr;
      double* ght = &gh.data[(static_cast<std::size_t>(t) * d.c + c) * d.s];
      const double* ghnext =
          t + 1 < d.l ? &gh.data[((static_cast<std::size_t>(t) + 1) * d.c + c) * d.s]
                      : nullptr;
      double dlnext = t + 1 < d.l ? delta.at2(t + 1, c) : 0.0;

      double gd_acc = 0.0;
      double gx_acc = 0.0;
      for (int s = 0; s < d.s; ++s) {
        double a = Ac[s];
        double ab = std::exp(dl * a);
        double u = (ab - 1.0) / a;
        double bb = u * Bt[s];
        double g = gyv * Ct[s];
        if (ghnext) g += std::exp(dlnext * a) * ghnext[s];
        ght[s] = g;
        double hp = hprev ? hprev[s] : 0.0;
        double gab = g * hp;
        double gbb = g * xv;
        gd_acc += gab * ab * a + gbb * Bt[s] * ab;
        gx_acc += g * bb;
        gA.data[static_cast<std::size_t>(c) * d.s + s] +=
            gab * ab * dl + gbb * Bt[s] * (ab * dl * a - ab + 1.0) / (a * a);
      }
      gdelta.at2(t, c) += gd_acc;
      gx.at2(t, c) += gx_acc + gyv * D.at1(c);
    }
  }

  // Phase 2: reductions across channels, one (t, s) cell per iteration.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int t = 0; t < d.l; ++t) {
    for (int s = 0; s < d.s; ++s) {
      double gB_acc = 0.0;
      double gC_acc = 0.0;
      for (int c = 0; c < d.c; ++c) {
        double a = A.data[static_cast<std::size_t>(c) * d.s + s];
        double ab = std::exp(delta.at2(t, c) * a);
        double u = (ab - 1.0) / a;
        gB_acc += gh.data[(static_cast<std::size_t>(t) * d.c + c) * d.s + s] * x.at2(t, c) * u;
        gC_acc += gy.at2(t, c) * h.data[(static_cast<std::size_t>(t) * d.c + c) * d.s + s];
      }
      gB.at2(t, s) += gB_acc;
      gC.at2(t, s) += gC_acc;
    }
  }
}

void scan_backward_ref(const Tensor& x, const Tensor& delta, const Tensor& Bseq,
                       const Tensor& Cseq, const Tensor& A, const Tensor& D, const Tensor& h,
                       const Tensor& gy, Tensor& gx, Tensor& gdelta, Tensor& gB, Tensor& gC,
                       Tensor& gA, Tensor& gD) {
  ScanDims d = dims_of(x, Bseq, A);
  Tensor gh({d.l, d.c, d.s});

  for (int c = 0; c < d.c; ++c) {
    double acc = 0.0;
    for (int t = 0; t < d.l; ++t) acc += gy.at2(t, c) * x.at2(t, c);
    gD.at1(c) += acc;
  }

  for (int c = 0; c < d.c; ++c)
    for (int t = d.l - 1; t >= 0; --t) {
      double gd_acc = 0.0;
      double gx_acc = 0.0;
      for (int s = 0; s < d.s; ++s) {
        double a = A.data[static_cast<std::size_t>(c) * d.s + s];
        double dl = delta.at2(t, c);
        double ab = std::exp(dl * a);
        double u = (ab - 1.0) / a;
        double bb = u * Bseq.at2(t, s);
        double g = gy.at2(t, c) * Cseq.at2(t, s);
        if (t + 1 < d.l)
          g += std::exp(delta.at2(t + 1, c) * a) *
               gh.data[((static_cast<std::size_t>(t) + 1) * d.c + c) * d.s + s];
        gh.data[(static_cast<std::size_t>(t) * d.c + c) * d.s + s] = g;
        double hp =
            t > 0 ? h.data[((static_cast<std::size_t>(t) - 1) * d.c + c) * d.s + s] : 0.0;
        double gab = g * hp;
        double gbb = g * x.at2(t, c);
        gd_acc += gab * ab * a + gbb * Bseq.at2(t, s) * ab;
        gx_acc += g * bb;
        gA.data[static_cast<std::size_t>(c) * d.s + s] +=
            gab * ab * dl + gbb * Bseq.at2(t, s) * (ab * dl * a - ab + 1.0) / (a * a);
      }
      gdelta.at2(t, c) += gd_acc;
      gx.at2(t, c) += gx_acc + gy.at2(t, c) * D.at1(c);
    }

  for (int t = 0; t < d.l; ++t)
    for (int s = 0; s < d.s; ++s) {
      double gB_acc = 0.0;
      double gC_acc = 0.0;
      for (int c = 0; c < d.c; ++c) {
        double a = A.data[static_cast<std::size_t>(c) * d.s + s];
        double ab = std::exp(delta.at2(t, c) * a);
        double u = (ab - 1.0) / a;
        gB_acc += gh.data[(static_cast<std::size_t>(t) * d.c + c) * d.s + s] * x.at2(t, c) * u;
        gC_acc += gy.at2(t, c) * h.data[(static_cast<std::size_t>(t) * d.c + c) * d.s + s];
      }
      gB.at2(t, s) += gB_acc;
      gC.at2(t, s) += gC_acc;
    }
}

}  // namespace uwir::kernels
