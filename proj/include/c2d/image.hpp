#pragma once

#include <filesystem>
#include <vector>

#include "c2d/tensor.hpp"

namespace c2d {

// Row-major RGB image, values in [0, 1].
struct ImageBuffer {
  int h = 0;
  int w = 0;
  std::vector<float> data;  // h * w * 3

  ImageBuffer() = default;
  ImageBuffer(int height, int width, float fill = 0.0f);

  float& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * w + c) * 3 + ch]; }
  float at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * w + c) * 3 + ch]; }
  bool empty() const { return h == 0 || w == 0; }
};

ImageBuffer load_png(const std::filesystem::path& path);
// Writes 8-bit RGB; values are clamped and rounded.
void save_png(const ImageBuffer& img, const std::filesystem::path& path);

// Rounds every value to the nearest multiple of 1/255 after clamping.
ImageBuffer quantize8(const ImageBuffer& img);
ImageBuffer clamp01(const ImageBuffer& img);

Tensor to_tensor(const ImageBuffer& img);
// [H x W x 3] tensor -> image, clamped to [0, 1].
ImageBuffer from_tensor(const Tensor& t);

ImageBuffer crop(const ImageBuffer& img, int top, int left, int h, int w);
// Top-left crop to extents divisible by s.
ImageBuffer mod_crop(const ImageBuffer& img, int s);

enum class ResizeDirection { up, down };

// Bicubic with a = -0.5, centre-aligned sampling and edge clamping. When
// shrinking, the kernel is stretched by 1/ratio (antialiasing) and its taps
// renormalized. Direction down gives ceil(H/s) x ceil(W/s); up gives
// floor(sH) x floor(sW).
ImageBuffer bicubic_resize(const ImageBuffer& img, double s, ResizeDirection dir, bool antialias = true);
ImageBuffer resize_to(const ImageBuffer& img, int out_h, int out_w, bool antialias = true);

// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

}  // namespace c2d
