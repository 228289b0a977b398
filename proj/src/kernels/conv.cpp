#include "uwir/kernels/conv.hpp"

#include <cassert>

#include "uwir/kernels/parallel.hpp"

namespace uwir::kernels {
namespace {

constexpr int kMaxChannels = 512;

struct ConvDims {
  int h, w, ci, k, co, pad, ho, wo;
};

ConvDims dims_of(const Tensor& in, const Tensor& w, int stride) {
  assert(in.rank() == 3 && w.rank() == 4);
  ConvDims d;
  d.h = in.dim(0);
  d.w = in.dim(1);
  d.ci = in.dim(2);
  d.k = w.dim(0);
  d.co = w.dim(3);
  assert(w.dim(1) == d.k && w.dim(2) == d.ci);
  assert(d.k == 1 || d.k == 3);
  assert(stride == 1 || stride == 2);
  assert(d.co <= kMaxChannels);
  d.pad = (d.k - 1) / 2;
  d.ho = (d.h + 2 * d.pad - d.k) / stride + 1;
  d.wo = (d.w + 2 * d.pad - d.k) / stride + 1;
  return d;
}

// The dispatched and reference paths below share these per-unit workers, and
// noinline keeps exactly one compiled body: two textually equal loops inlined
// into different callers may still be contracted differently (the input
// gradient demonstrably drifted a few ulp that way), which would break the
// bit-equality contract.

// One output pixel; accumulation order is (ki, kj, ci).
__attribute__((noinline)) void conv_pixel(const ConvDims& d, const Tensor& in, const Tensor& w,
                                          const Tensor& b, int stride, int oi, int oj,
                                          double* acc) {
  for (int co = 0; co < d.co; ++co) acc[co] = b.empty() ? 0.0 : b.at1(co);
  for (int ki = 0; ki < d.k; ++ki) {
    int ii = oi * stride + ki - d.pad;
    if (ii < 0 || ii >= d.h) continue;
    for (int kj = 0; kj < d.k; ++kj) {
      int jj = oj * stride + kj - d.pad;
      if (jj < 0 || jj >= d.w) continue;
      const double* inp = &in.data[(static_cast<std::size_t>(ii) * d.w + jj) * d.ci];
      const double* wp = &w.data[(static_cast<std::size_t>(ki) * d.k + kj) *
                                 static_cast<std::size_t>(d.ci) * d.co];
      for (int ci = 0; ci < d.ci; ++ci) {
        double v = inp[ci];
        const double* wrow = wp + static_cast<std::size_t>(ci) * d.co;
        for (int co = 0; co < d.co; ++co) acc[co] += v * wrow[co];
      }
    }
  }
}

}  // namespace

void conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
                    Tensor& out) {
  ConvDims d = dims_of(in, w, stride);
  out = Tensor({d.ho, d.wo, d.co});
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int oi = 0; oi < d.ho; ++oi) {
    double acc[kMaxChannels];
    for (int oj = 0; oj < d.wo; ++oj) {
      conv_pixel(d, in, w, b, stride, oi, oj, acc);
      double* op = &out.data[(static_cast<std::size_t>(oi) * d.wo + oj) * d.co];
      for (int co = 0; co < d.co; ++co) op[co] = acc[co];
    }
  }
}

void conv2d_forward_ref(const Tensor& in, const Tensor& w, const Tensor& b, int stride,
                        Tensor& out) {
  ConvDims d = dims_of(in, w, stride);
  out = Tensor({d.ho, d.wo, d.co});
  double acc[kMaxChannels];
  for (int oi = 0; oi < d.ho; ++oi)
    for (int oj = 0; oj < d.wo; ++oj) {
      conv_pixel(d, in, w, b, stride, oi, oj, acc);
      double* op = &out.data[(static_cast<std::size_t>(oi) * d.wo + oj) * d.co];
      for (int co = 0; co < d.co; ++co) op[co] = acc[co];
    }
}

namespace {

// One fixed-order sum per output channel.
__attribute__((noinline)) void backward_bias_one(const ConvDims& d, const Tensor& gout, int co,
                                                 Tensor* gb) {
  double acc = 0.0;
  for (std::size_t p = 0; p < gout.numel(); p += d.co) acc += gout.data[p + co];
  gb->at1(co) += acc;
}

// One (ki, kj, ci) weight row, reduced over all output pixels serially.
__attribute__((noinline)) void backward_weight_row(const ConvDims& d, const Tensor& in,
                                                   const Tensor& gout, int stride, int row,
                                                   Tensor* gw) {
  int ki = row / (d.k * d.ci);
  int kj = (row / d.ci) % d.k;
  int ci = row % d.ci;
  double acc[kMaxChannels];
  for (int co = 0; co < d.co; ++co) acc[co] = 0.0;
  for (int oi = 0; oi < d.ho; ++oi) {
    int ii = oi * stride + ki - d.pad;
    if (ii < 0 || ii >= d.h) continue;
    for (int oj = 0; oj < d.wo; ++oj) {
      int jj = oj * stride + kj - d.pad;
      if (jj < 0 || jj >= d.w) continue;
      double v = in.at3(ii, jj, ci);
      const double* gp = &gout.data[(static_cast<std::size_t>(oi) * d.wo + oj) * d.co];
      for (int co = 0; co < d.co; ++co) acc[co] += v * gp[co];
    }
  }
  double* dst = &gw->data[static_cast<std::size_t>(row) * d.co];
  for (int co = 0; co < d.co; ++co) dst[co] += acc[co];
}

// Gather form: each input pixel of row ii sums the outputs it fed.
__attribute__((noinline)) void backward_input_row(const ConvDims& d, const Tensor& w,
                                                  const Tensor& gout, int stride, int ii,
                                                  Tensor* gin) {
  double acc[kMaxChannels];
  for (int jj = 0; jj < d.w; ++jj) {
    for (int ci = 0; ci < d.ci; ++ci) acc[ci] = 0.0;
    for (int ki = 0; ki < d.k; ++ki) {
      int num = ii + d.pad - ki;
      if (num % stride != 0) continue;
      int oi = num / stride;
      if (oi < 0 || oi >= d.ho) continue;
      for (int kj = 0; kj < d.k; ++kj) {
        int numj = jj + d.pad - kj;
        if (numj % stride != 0) continue;
        int oj = numj / stride;
        if (oj < 0 || oj >= d.wo) continue;
        const double* gp = &gout.data[(static_cast<std::size_t>(oi) * d.wo + oj) * d.co];
        const double* wp = &w.data[(static_cast<std::size_t>(ki) * d.k + kj) *
                                   static_cast<std::size_t>(d.ci) * d.co];
        for (int co = 0; co < d.co; ++co) {
          double g = gp[co];
          const double* wcol = wp + co;
          for (int ci = 0; ci < d.ci; ++ci)
            acc[ci] += g * wcol[static_cast<std::size_t>(ci) * d.co];
        }
      }
    }
    double* dst = &gin->data[(static_cast<std::size_t>(ii) * d.w + jj) * d.ci];
    for (int ci = 0; ci < d.ci; ++ci) dst[ci] += acc[ci];
  }
}

}  // namespace

void conv2d_backward(const Tensor& in, const Tensor& w, int stride, const Tensor& gout,
                     Tensor* gin, Tensor* gw, Tensor* gb) {
  ConvDims d = dims_of(in, w, stride);
  assert(gout.dim(0) == d.ho && gout.dim(1) == d.wo && gout.dim(2) == d.co);

  if (gb) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
    for (int co = 0; co < d.co; ++co) backward_bias_one(d, gout, co, gb);
  }

  if (gw) {
    int rows = d.k * d.k * d.ci;
#pragma omp parallel for schedule(static) if (parallel_enabled())
    for (int row = 0; row < rows; ++row) backward_weight_row(d, in, gout, stride, row, gw);
  }

  if (gin) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
    for (int ii = 0; ii < d.h; ++ii) backward_input_row(d, w, gout, stride, ii, gin);
  }
}

void conv2d_backward_ref(const Tensor& in, const Tensor& w, int stride, const Tensor& gout,
                         Tensor* gin, Tensor* gw, Tensor* gb) {
  ConvDims d = dims_of(in, w, stride);
  assert(gout.dim(0) == d.ho && gout.dim(1) == d.wo && gout.dim(2) == d.co);

  if (gb)
    for (int co = 0; co < d.co; ++co) backward_bias_one(d, gout, co, gb);

  if (gw) {
    int rows = d.k * d.k * d.ci;
    for (int row = 0; row < rows; ++row) backward_weight_row(d, in, gout, stride, row, gw);
  }

  if (gin)
    for (int ii = 0; ii < d.h; ++ii) backward_input_row(d, w, gout, stride, ii, gin);
}

namespace {

// Depthwise workers, shared by both paths for the same reason as above.
__attribute__((noinline)) void dw_forward_row(int h, int wd, int c, const Tensor& in,
                                              const Tensor& w, int i, Tensor& out) {
  double acc[kMaxChannels];
  for (int j = 0; j < wd; ++j) {
    for (int ch = 0; ch < c; ++ch) acc[ch] = 0.0;
    for (int ki = 0; ki < 3; ++ki) {
      int ii = i + ki - 1;
      if (ii < 0 || ii >= h) continue;
      for (int kj = 0; kj < 3; ++kj) {
        int jj = j + kj - 1;
        if (jj < 0 || jj >= wd) continue;
        const double* inp = &in.data[(static_cast<std::size_t>(ii) * wd + jj) * c];
        const double* wp = &w.data[(static_cast<std::size_t>(ki) * 3 + kj) * c];
        for (int ch = 0; ch < c; ++ch) acc[ch] += inp[ch] * wp[ch];
      }
    }
    double* op = &out.data[(static_cast<std::size_t>(i) * wd + j) * c];
    for (int ch = 0; ch < c; ++ch) op[ch] = acc[ch];
  }
}

__attribute__((noinline)) void dw_weight_channel(int h, int wd, const Tensor& in,
                                                 const Tensor& gout, int ch, Tensor* gw) {
  for (int ki = 0; ki < 3; ++ki)
    for (int kj = 0; kj < 3; ++kj) {
      double acc = 0.0;
      for (int i = 0; i < h; ++i) {
        int ii = i + ki - 1;
        if (ii < 0 || ii >= h) continue;
        for (int j = 0; j < wd; ++j) {
          int jj = j + kj - 1;
          if (jj < 0 || jj >= wd) continue;
          acc += in.at3(ii, jj, ch) * gout.at3(i, j, ch);
        }
      }
      gw->at3(ki, kj, ch) += acc;
    }
}

__attribute__((noinline)) void dw_input_row(int h, int wd, int c, const Tensor& w,
                                            const Tensor& gout, int ii, Tensor* gin) {
  for (int jj = 0; jj < wd; ++jj)
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int ki = 0; ki < 3; ++ki) {
        int i = ii - ki + 1;
        if (i < 0 || i >= h) continue;
        for (int kj = 0; kj < 3; ++kj) {
          int j = jj - kj + 1;
          if (j < 0 || j >= wd) continue;
          acc += gout.at3(i, j, ch) * w.at3(ki, kj, ch);
        }
      }
      gin->at3(ii, jj, ch) += acc;
    }
}

}  // namespace

void dwconv3_forward(const Tensor& in, const Tensor& w, Tensor& out) {
  assert(in.rank() == 3 && w.rank() == 3 && w.dim(0) == 3 && w.dim(1) == 3);
  int h = in.dim(0), wd = in.dim(1), c = in.dim(2);
  assert(w.dim(2) == c && c <= kMaxChannels);
  out = Tensor({h, wd, c});
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < h; ++i) dw_forward_row(h, wd, c, in, w, i, out);
}

void dwconv3_forward_ref(const Tensor& in, const Tensor& w, Tensor& out) {
  assert(in.rank() == 3 && w.rank() == 3 && w.dim(0) == 3 && w.dim(1) == 3);
  int h = in.dim(0), wd = in.dim(1), c = in.dim(2);
  assert(w.dim(2) == c && c <= kMaxChannels);
  out = Tensor({h, wd, c});
  for (int i = 0; i < h; ++i) dw_forward_row(h, wd, c, in, w, i, out);
}

void dwconv3_backward(const Tensor& in, const Tensor& w, const Tensor& gout, Tensor* gin,
                      Tensor* gw) {
  int h = in.dim(0), wd = in.dim(1), c = in.dim(2);

  if (gw) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
    for (int ch = 0; ch < c; ++ch) dw_weight_channel(h, wd, in, gout, ch, gw);
  }

  if (gin) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
    for (int ii = 0; ii < h; ++ii) dw_input_row(h, wd, c, w, gout, ii, gin);
  }
}

void dwconv3_backward_ref(const Tensor& in, const Tensor& w, const Tensor& gout, Tensor* gin,
                          Tensor* gw) {
  int h = in.dim(0), wd = in.dim(1), c = in.dim(2);

  if (gw)
    for (int ch = 0; ch < c; ++ch) dw_weight_channel(h, wd, in, gout, ch, gw);

  if (gin)
    for (int ii = 0; ii < h; ++ii) dw_input_row(h, wd, c, w, gout, ii, gin);
}

}  // namespace uwir::kernels
