#pragma once
// PNG input/output. 8-bit RGB for images (values scaled to [0,1]), 16-bit
// grayscale for depth exchange with external providers.

#include <string>

#include "uwir/core/tensor.hpp"

namespace uwir {

// Reads any PNG as 8-bit RGB, returns [H, W, 3] scaled by 1/255.
Tensor load_png_rgb(const std::string& path);

// Writes [H, W, 3]; values are clamped to [0,1] and rounded to 8 bits.
void save_png_rgb(const Tensor& img, const std::string& path);

// Reads a 16-bit single-channel PNG as [H, W] scaled by 1/65535.
Tensor load_png_gray16(const std::string& path);

// Writes [H, W]; values are clamped to [0,1] and rounded to 16 bits.
void save_png_gray16(const Tensor& img, const std::string& path);

}  // namespace uwir
