// Times the dispatched kernel paths against their serial references on
// training-typical shapes. Conv and scan pairs must agree bit for bit (the
// dispatch only parallelizes independent outputs); the transform pair wraps
// a different algorithm, so its deviation column is the interesting one.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "uwir/core/rng.hpp"
#include "uwir/core/tensor.hpp"
#include "uwir/kernels/conv.hpp"
#include "uwir/kernels/dft.hpp"
#include "uwir/kernels/parallel.hpp"
#include "uwir/kernels/scan.hpp"

using namespace uwir;

namespace {

Tensor rand_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm caches and any lazy setup
  std::vector<double> runs;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    runs.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(runs.begin(), runs.end());
  return runs[runs.size() / 2];
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]));
  return worst;
}

void report(const char* name, const char* size, double ref_ms, double fast_ms, double diff) {
  std::printf("%-18s %-14s %9.3f %9.3f %7.2fx %10.2e\n", name, size, ref_ms, fast_ms,
              ref_ms / fast_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int reps = argc > 1 ? std::atoi(argv[1]) : 5;
  if (reps < 1) reps = 1;
  kernels::set_parallel(true);
  Rng rng(1234);

  std::printf("%-18s %-14s %9s %9s %8s %10s\n", "kernel", "shape", "ref ms", "fast ms",
              "speedup", "max|diff|");

  {
    Tensor in = rand_tensor({64, 64, 32}, rng);
    Tensor w = rand_tensor({3, 3, 32, 32}, rng);
    Tensor b = rand_tensor({32}, rng);
    Tensor out, out_ref;
    double fast = time_ms([&] { kernels::conv2d_forward(in, w, b, 1, out); }, reps);
    double ref = time_ms([&] { kernels::conv2d_forward_ref(in, w, b, 1, out_ref); }, reps);
    report("conv3x3 forward", "64x64x32", ref, fast, max_abs_diff(out, out_ref));

    Tensor gout = rand_tensor(out.shape, rng);
    Tensor gin(in.shape), gw(w.shape), gb(b.shape);
    Tensor gin_r(in.shape), gw_r(w.shape), gb_r(b.shape);
    double bfast = time_ms(
        [&] {
          gin = Tensor(in.shape);
          gw = Tensor(w.shape);
          gb = Tensor(b.shape);
          kernels::conv2d_backward(in, w, 1, gout, &gin, &gw, &gb);
        },
        reps);
    double bref = time_ms(
        [&] {
          gin_r = Tensor(in.shape);
          gw_r = Tensor(w.shape);
          gb_r = Tensor(b.shape);
          kernels::conv2d_backward_ref(in, w, 1, gout, &gin_r, &gw_r, &gb_r);
        },
        reps);
    double diff = std::max({max_abs_diff(gin, gin_r), max_abs_diff(gw, gw_r),
                            max_abs_diff(gb, gb_r)});
    report("conv3x3 backward", "64x64x32", bref, bfast, diff);
  }

  {
    Tensor in = rand_tensor({128, 128, 32}, rng);
    Tensor w = rand_tensor({3, 3, 32}, rng);
    Tensor out, out_ref;
    double fast = time_ms([&] { kernels::dwconv3_forward(in, w, out); }, reps);
    double ref = time_ms([&] { kernels::dwconv3_forward_ref(in, w, out_ref); }, reps);
    report("depthwise forward", "128x128x32", ref, fast, max_abs_diff(out, out_ref));

    Tensor gout = rand_tensor(out.shape, rng);
    Tensor gin(in.shape), gw(w.shape), gin_r(in.shape), gw_r(w.shape);
    double bfast = time_ms(
        [&] {
          gin = Tensor(in.shape);
          gw = Tensor(w.shape);
          kernels::dwconv3_backward(in, w, gout, &gin, &gw);
        },
        reps);
    double bref = time_ms(
        [&] {
          gin_r = Tensor(in.shape);
          gw_r = Tensor(w.shape);
          kernels::dwconv3_backward_ref(in, w, gout, &gin_r, &gw_r);
        },
        reps);
    report("depthwise backward", "128x128x32", bref, bfast,
           std::max(max_abs_diff(gin, gin_r), max_abs_diff(gw, gw_r)));
  }

  {
    int L = 4096, C = 32, S = 16;
    Tensor x = rand_tensor({L, C}, rng);
    Tensor delta = rand_tensor({L, C}, rng);
    for (double& v : delta.data) v = 0.01 + 0.5 * std::fabs(v);
    Tensor Bseq = rand_tensor({L, S}, rng);
    Tensor Cseq = rand_tensor({L, S}, rng);
    Tensor A = rand_tensor({C, S}, rng);
    for (double& v : A.data) v = -0.1 - std::fabs(v);
    Tensor D = rand_tensor({C}, rng);
    Tensor y({L, C}), h({L, C, S}), y_r({L, C}), h_r({L, C, S});
    double fast = time_ms([&] { kernels::scan_forward(x, delta, Bseq, Cseq, A, D, y, h); }, reps);
    double ref =
        time_ms([&] { kernels::scan_forward_ref(x, delta, Bseq, Cseq, A, D, y_r, h_r); }, reps);
    report("state scan forward", "L4096 C32 S16", ref, fast, max_abs_diff(y, y_r));

    Tensor gy = rand_tensor({L, C}, rng);
    Tensor gx({L, C}), gd({L, C}), gB({L, S}), gC({L, S}), gA({C, S}), gD({C});
    Tensor gx_r({L, C}), gd_r({L, C}), gB_r({L, S}), gC_r({L, S}), gA_r({C, S}), gD_r({C});
    double bfast = time_ms(
        [&] {
          gx = Tensor({L, C});
          gd = Tensor({L, C});
          gB = Tensor({L, S});
          gC = Tensor({L, S});
          gA = Tensor({C, S});
          gD = Tensor({C});
          kernels::scan_backward(x, delta, Bseq, Cseq, A, D, h, gy, gx, gd, gB, gC, gA, gD);
        },
        reps);
    double bref = time_ms(
        [&] {
          gx_r = Tensor({L, C});
          gd_r = Tensor({L, C});
          gB_r = Tensor({L, S});
          gC_r = Tensor({L, S});
          gA_r = Tensor({C, S});
          gD_r = Tensor({C});
          kernels::scan_backward_ref(x, delta, Bseq, Cseq, A, D, h, gy, gx_r, gd_r, gB_r, gC_r,
                                     gA_r, gD_r);
        },
        reps);
    double diff = std::max({max_abs_diff(gx, gx_r), max_abs_diff(gd, gd_r),
                            max_abs_diff(gB, gB_r), max_abs_diff(gC, gC_r),
                            max_abs_diff(gA, gA_r), max_abs_diff(gD, gD_r)});
    report("state scan backward", "L4096 C32 S16", bref, bfast, diff);
  }

  {
    Tensor x = rand_tensor({64, 64, 4}, rng);
    Tensor re, im, re_r, im_r;
    double fast = time_ms([&] { kernels::dft2_forward(x, re, im); }, reps);
    double ref = time_ms([&] { kernels::dft2_forward_ref(x, re_r, im_r); }, reps);
    report("transform forward", "64x64x4", ref, fast,
           std::max(max_abs_diff(re, re_r), max_abs_diff(im, im_r)));

    Tensor or_, oi, or_r, oi_r;
    double ifast = time_ms([&] { kernels::dft2_inverse(re, im, or_, oi); }, reps);
    double iref = time_ms([&] { kernels::dft2_inverse_ref(re_r, im_r, or_r, oi_r); }, reps);
    report("transform inverse", "64x64x4", iref, ifast,
           std::max(max_abs_diff(or_, or_r), max_abs_diff(oi, oi_r)));
  }

  return 0;
}
