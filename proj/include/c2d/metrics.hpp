#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "c2d/image.hpp"

namespace c2d {

// Full-range BT.601 luma, 0.299 R + 0.587 G + 0.114 B, as an h x w plane.
std::vector<double> luma(const ImageBuffer& img);

// 10 log10(1 / MSE) over Y (on_y) or all RGB samples; +inf for identical inputs.
double psnr(const ImageBuffer& a, const ImageBuffer& b, bool on_y = true);
// 11 x 11 Gaussian window (sigma 1.5), K1 0.01, K2 0.03, L = 1, averaged over
// valid window positions. RGB mode averages the three channel SSIMs.
double ssim(const ImageBuffer& a, const ImageBuffer& b, bool on_y = true);

// Removes `border` pixels from every side.
ImageBuffer shave(const ImageBuffer& img, int border);

struct MetricRow {
  std::string image;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::string model;
  std::string dataset;
  double scale = 0.0;
  bool on_y = true;
  int border = 0;
  std::vector<MetricRow> rows;

  double mean_psnr() const;
  double mean_ssim() const;
  // Header image,psnr_db,ssim; one row per image; a closing MEAN row.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct BenchmarkOptions {
  bool on_y = true;
  int border = -1;  // negative: crop ceil(s) pixels
};

// LR input -> super-resolved output at the requested scale.
using Upscaler = std::function<ImageBuffer(const ImageBuffer& lr, double scale)>;

// For each HR image: crop to a multiple of s, bicubic shrink by s, upscale,
// and score against the cropped HR.
MetricReport run_benchmark(const std::vector<std::pair<std::string, ImageBuffer>>& images, int scale,
                           const Upscaler& upscale, const BenchmarkOptions& opt = {});
// Bicubic enlargement of the LR input.
Upscaler bicubic_upscaler();

}  // namespace c2d
