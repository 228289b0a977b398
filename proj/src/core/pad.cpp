#include "uwir/core/pad.hpp"

#include "uwir/core/errors.hpp"

namespace uwir {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  // Fold into one period of the reflected sequence, length 2(n-1).
  int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

PaddedImage pad_to_multiple(const Tensor& img, int m) {
  if (m != 8 && m != 16) throw InvalidInput("pad_to_multiple: m must be 8 or 16");
  if (img.rank() != 3 || img.dim(0) < 1 || img.dim(1) < 1 || img.dim(2) < 1)
    throw InvalidInput("pad_to_multiple: image dims must be positive");

  int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  int hp = ((h + m - 1) / m) * m;
  int wp = ((w + m - 1) / m) * m;
  if (hp == h && wp == w) return {img, CropRecord{}};

  Tensor out({hp, wp, c});
  for (int i = 0; i < hp; ++i) {
    int si = reflect_index(i, h);
    for (int j = 0; j < wp; ++j) {
      int sj = reflect_index(j, w);
      for (int k = 0; k < c; ++k) out.at3(i, j, k) = img.at3(si, sj, k);
    }
  }
  return {std::move(out), CropRecord{h, w}};
}

Tensor crop_to_record(const Tensor& img, const CropRecord& crop) {
  if (crop.empty()) return img;
  if (img.rank() != 3 || crop.h > img.dim(0) || crop.w > img.dim(1))
    throw InvalidInput("crop_to_record: record larger than image");
  int c = img.dim(2);
  Tensor out({crop.h, crop.w, c});
  for (int i = 0; i < crop.h; ++i)
    for (int j = 0; j < crop.w; ++j)
      for (int k = 0; k < c; ++k) out.at3(i, j, k) = img.at3(i, j, k);
  return out;
}

}  // namespace uwir
