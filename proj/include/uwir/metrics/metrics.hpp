#pragma once
// Evaluation metrics, native implementations. Full reference: PSNR and
// single-scale SSIM. No reference: UCIQE and UIQM, with the weight vectors
// from their defining papers. All functions are pure and deterministic;
// parallelism belongs at the per-image level above them.

#include <map>
#include <string>
#include <vector>

#include "uwir/core/tensor.hpp"

namespace uwir::metrics {

// 10 log10(peak^2 / MSE) over every element; identical inputs return +inf.
// Throws InvalidInput on shape mismatch.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean local SSIM on luminance (0.299, 0.587, 0.114), 11x11 Gaussian window
// sigma 1.5, K1 = 0.01, K2 = 0.03, peak 1, valid-mode windows. Throws
// InvalidInput on shape mismatch or images smaller than the window.
double ssim(const Tensor& a, const Tensor& b);

// Underwater color image quality: 0.4680 sigma_chroma + 0.2745 con_l +
// 0.2576 mu_saturation, computed in CIELab with L, a, b scaled by 1/100.
// con_l is the spread between the 1st and 99th luminance percentiles
// (nearest rank); saturation is chroma / sqrt(chroma^2 + L^2), 0 at black.
// Weights from the metric's defining paper (Yang and Sowmya, 2015).
double uciqe(const Tensor& img);

// Underwater image quality measure components. Weights and component
// definitions from the defining paper (Panetta, Gao, Agaian, 2016):
//   uicm:   asymmetric alpha-trimmed (alpha = 0.1) RG/YB colorfulness,
//           -0.0268 sqrt(muRG^2 + muYB^2) + 0.1586 sqrt(s2RG + s2YB)
//   uism:   Sobel-magnitude-weighted channels, log-contrast (EME) over 8x8
//           blocks of the Sobel-valid interior, channel weights
//           (0.299, 0.587, 0.114)
//   uiconm: logAMEE entropy of (max-min)/(max+min) over 8x8 RGB blocks
// Trailing rows/columns that do not fill a block are dropped.
struct UiqmParts {
  double uicm = 0.0;
  double uism = 0.0;
  double uiconm = 0.0;
  // 0.0282 uicm + 0.2953 uism + 3.5753 uiconm, each product rounded
  // individually, so the same unfused arithmetic reproduces it bit for bit.
  double total = 0.0;
};
UiqmParts uiqm_parts(const Tensor& img);
double uiqm(const Tensor& img);

// Per-image metric table plus arithmetic-mean aggregates.
struct MetricReport {
  std::vector<std::string> images;                            // insertion order
  std::map<std::string, std::map<std::string, double>> per_image;

  void add(const std::string& image, const std::string& metric, double value);
  // metric -> mean over images carrying it.
  std::map<std::string, double> aggregate() const;
  // Columns image,psnr,ssim,uciqe,uiqm; final summary row labeled "mean".
  std::string to_csv() const;
};

}  // namespace uwir::metrics
