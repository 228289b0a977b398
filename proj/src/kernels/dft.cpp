#include "uwir/kernels/dft.hpp"

#include <fftw3.h>

#include <cassert>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace uwir::kernels {
namespace {

// Plans are cached per (H, W, sign). FFTW_UNALIGNED lets one plan serve any
// caller-provided buffer through fftw_execute_dft.
class PlanCache {
 public:
  fftw_plan get(int h, int w, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> tmp(static_cast<std::size_t>(h) * w);
    fftw_plan p = fftw_plan_dft_2d(h, w, tmp.data(), tmp.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void run_dft(const Tensor& re_in, const Tensor* im_in, Tensor& re_out, Tensor& im_out,
             int sign) {
  assert(re_in.rank() == 3);
  int h = re_in.dim(0), w = re_in.dim(1), c = re_in.dim(2);
  re_out = Tensor({h, w, c});
  im_out = Tensor({h, w, c});
  fftw_plan plan = plan_cache().get(h, w, sign);

  std::vector<fftw_complex> buf(static_cast<std::size_t>(h) * w);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        std::size_t p = static_cast<std::size_t>(i) * w + j;
        buf[p][0] = re_in.at3(i, j, ch);
        buf[p][1] = im_in ? im_in->at3(i, j, ch) : 0.0;
      }
    fftw_execute_dft(plan, buf.data(), buf.data());
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        std::size_t p = static_cast<std::size_t>(i) * w + j;
        re_out.at3(i, j, ch) = buf[p][0];
        im_out.at3(i, j, ch) = buf[p][1];
      }
  }
}

void run_dft_ref(const Tensor& re_in, const Tensor* im_in, Tensor& re_out, Tensor& im_out,
                 int sign) {
  assert(re_in.rank() == 3);
  int h = re_in.dim(0), w = re_in.dim(1), c = re_in.dim(2);
  re_out = Tensor({h, w, c});
  im_out = Tensor({h, w, c});
  double dir = sign < 0 ? -1.0 : 1.0;
  for (int ch = 0; ch < c; ++ch)
    for (int u = 0; u < h; ++u)
      for (int v = 0; v < w; ++v) {
        double sr = 0.0, si = 0.0;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            double ang = dir * 2.0 * M_PI *
                         (static_cast<double>(u) * i / h + static_cast<double>(v) * j / w);
            double cr = std::cos(ang), ci = std::sin(ang);
            double xr = re_in.at3(i, j, ch);
            double xi = im_in ? im_in->at3(i, j, ch) : 0.0;
            sr += xr * cr - xi * ci;
            si += xr * ci + xi * cr;
          }
        re_out.at3(u, v, ch) = sr;
        im_out.at3(u, v, ch) = si;
      }
}

}  // namespace

void dft2_forward(const Tensor& x, Tensor& re, Tensor& im) {
  run_dft(x, nullptr, re, im, FFTW_FORWARD);
}

void dft2_forward_ref(const Tensor& x, Tensor& re, Tensor& im) {
  run_dft_ref(x, nullptr, re, im, -1);
}

void dft2_inverse(const Tensor& re, const Tensor& im, Tensor& out_re, Tensor& out_im) {
  run_dft(re, &im, out_re, out_im, FFTW_BACKWARD);
}

void dft2_inverse_ref(const Tensor& re, const Tensor& im, Tensor& out_re, Tensor& out_im) {
  run_dft_ref(re, &im, out_re, out_im, +1);
}

}  // namespace uwir::kernels
