#include "uwir/depth/depth.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "uwir/core/errors.hpp"
#include "uwir/core/image_io.hpp"

namespace uwir::depth {

void DepthProviderSpec::validate() const {
  if (mode == Mode::external && external_command.empty())
    throw InvalidInput("external depth provider needs a command");
  if (mode == Mode::stub && !differentiable)
    throw InvalidInput("the stub depth provider is always differentiable");
}

ad::Var predict_depth_stub(ad::Tape& t, ad::Var img) {
  (void)t;  // ops append to the Var's own tape
  const Tensor& v = img.val();
  if (v.rank() != 3 || v.dim(2) != 3) throw InvalidInput("depth stub expects an [H,W,3] image");
  ad::Var r = ad::slice_c(img, 0, 1);
  ad::Var g = ad::slice_c(img, 1, 2);
  ad::Var b = ad::slice_c(img, 2, 3);
  ad::Var luma =
      ad::add(ad::add(ad::scale(r, 0.299), ad::scale(g, 0.587)), ad::scale(b, 0.114));
  ad::Var inv = ad::add_scalar(ad::scale(luma, -1.0), 1.0);
  return ad::box_blur(inv, 2);
}

namespace {

Tensor stub_raster(const Tensor& img) {
  ad::Tape t;
  ad::Var d = predict_depth_stub(t, t.constant(img));
  Tensor out({img.dim(0), img.dim(1)});
  out.data = d.val().data;
  return out;
}

Tensor external_raster(const Tensor& img, const DepthProviderSpec& spec) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path();
  auto tag = std::to_string(static_cast<unsigned long>(::getpid()));
  fs::path in = dir / ("uwir_depth_in_" + tag + ".png");
  fs::path out = dir / ("uwir_depth_out_" + tag + ".png");
  fs::path errf = dir / ("uwir_depth_err_" + tag + ".txt");
  save_png_rgb(img, in.string());
  std::string cmd = spec.external_command + " \"" + in.string() + "\" \"" + out.string() +
                    "\" 2> \"" + errf.string() + "\"";
  int rc = std::system(cmd.c_str());
  std::string diag;
  {
    std::ifstream e(errf);
    std::string line;
    while (std::getline(e, line) && diag.size() < 4096) diag += line + "\n";
  }
  auto cleanup = [&] {
    std::error_code ec;
    fs::remove(in, ec);
    fs::remove(out, ec);
    fs::remove(errf, ec);
  };
  if (rc != 0) {
    cleanup();
    throw ProviderError("depth command exited with status " + std::to_string(rc) + ": " + diag);
  }
  Tensor raw;
  try {
    raw = load_png_gray16(out.string());
  } catch (const std::exception& e) {
    cleanup();
    throw ProviderError(std::string("depth command produced an unreadable raster: ") + e.what());
  }
  cleanup();
  if (raw.dim(0) != img.dim(0) || raw.dim(1) != img.dim(1))
    throw ProviderError("depth raster size " + std::to_string(raw.dim(0)) + "x" +
                        std::to_string(raw.dim(1)) + " does not match the image");
  return normalize_depth(raw);
}

}  // namespace

Tensor predict_depth(const Tensor& img, const DepthProviderSpec& spec) {
  spec.validate();
  if (img.rank() != 3 || img.dim(2) != 3) throw InvalidInput("depth expects an [H,W,3] image");
  if (spec.mode == DepthProviderSpec::Mode::stub) return stub_raster(img);
  return external_raster(img, spec);
}

Tensor normalize_depth(const Tensor& raw) {
  if (raw.rank() != 2) throw InvalidInput("normalize_depth expects an [H,W] raster");
  double lo = raw.data[0], hi = raw.data[0];
  for (double v : raw.data) {
    if (!std::isfinite(v)) throw InvalidInput("normalize_depth: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor out({raw.dim(0), raw.dim(1)});
  if (hi == lo) {
    out.fill(0.5);
    return out;
  }
  double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < raw.numel(); ++i) out.data[i] = (raw.data[i] - lo) * inv;
  return out;
}

Tensor downsample_depth(const Tensor& d, int level) {
  if (d.rank() != 2) throw InvalidInput("downsample_depth expects an [H,W] raster");
  if (level < 0 || level > 3) throw InvalidInput("downsample level must be in [0,3]");
  int div = 1 << level;
  if (d.dim(0) % div != 0 || d.dim(1) % div != 0)
    throw InvalidInput("raster size not divisible by 2^level");
  Tensor cur = d;
  for (int l = 0; l < level; ++l) {
    int h = cur.dim(0) / 2, w = cur.dim(1) / 2;
    Tensor next({h, w});
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        next.at2(i, j) = 0.25 * (cur.at2(2 * i, 2 * j) + cur.at2(2 * i, 2 * j + 1) +
                                 cur.at2(2 * i + 1, 2 * j) + cur.at2(2 * i + 1, 2 * j + 1));
    cur = std::move(next);
  }
  return cur;
}

}  // namespace uwir::depth
