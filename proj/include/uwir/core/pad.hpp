#pragma once
// Reflective padding to a size multiple, with an exact inverse crop.

#include "uwir/core/tensor.hpp"

namespace uwir {

// Original size to restore after padding; h == w == 0 means no padding applied.
struct CropRecord {
  int h = 0;
  int w = 0;
  bool empty() const { return h == 0 && w == 0; }
};

// Mirror an out-of-range index back into [0, n). Reflection does not repeat
// the edge sample; n == 1 degenerates to clamping.
int reflect_index(int i, int n);

// Pads a [H, W, C] tensor reflectively so both spatial dims become multiples
// of m (m in {8, 16}). Returns the padded tensor and the record needed to
// restore the original size. Throws InvalidInput on bad m or empty dims.
struct PaddedImage {
  Tensor t;
  CropRecord crop;
};
PaddedImage pad_to_multiple(const Tensor& img, int m);

// Crops the top-left crop.h x crop.w region; identity when crop is empty.
Tensor crop_to_record(const Tensor& img, const CropRecord& crop);

}  // namespace uwir
