#include "c2d/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "c2d/errors.hpp"

namespace c2d {

namespace {

void require_same(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.h != b.h || a.w != b.w) {
    throw ShapeError("image extents differ: " + std::to_string(a.h) + "x" + std::to_string(a.w) + " vs " +
                     std::to_string(b.h) + "x" + std::to_string(b.w));
  }
}

std::vector<double> channel(const ImageBuffer& img, int ch) {
  std::vector<double> out(static_cast<std::size_t>(img.h) * img.w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.data[i * 3 + ch];
  return out;
}

std::vector<double> gaussian_window() {
  constexpr int n = 11;
  constexpr double sigma = 1.5;
  std::vector<double> g(n * n);
  double total = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double dy = y - 5, dx = x - 5;
      g[y * n + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      total += g[y * n + x];
    }
  for (auto& v : g) v /= total;
  return g;
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
  static const std::vector<double> g = gaussian_window();
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int y = 0; y + 11 <= h; ++y)
    for (int x = 0; x + 11 <= w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = 0; dy < 11; ++dy)
        for (int dx = 0; dx < 11; ++dx) {
          const double k = g[dy * 11 + dx];
          const std::size_t i = static_cast<std::size_t>(y + dy) * w + x + dx;
          ma += k * a[i];
          mb += k * b[i];
          saa += k * a[i] * a[i];
          sbb += k * b[i] * b[i];
          sab += k * a[i] * b[i];
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  return total / (static_cast<double>(h - 10) * (w - 10));
}

}  // namespace

std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> y(static_cast<std::size_t>(img.h) * img.w);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] + 0.114 * img.data[i * 3 + 2];
  }
  return y;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, bool on_y) {
  require_same(a, b);
  if (a.empty()) throw ShapeError("PSNR of empty images");
  double sse = 0.0;
  std::size_t n = 0;
  if (on_y) {
    const auto ya = luma(a), yb = luma(b);
    for (std::size_t i = 0; i < ya.size(); ++i) sse += (ya[i] - yb[i]) * (ya[i] - yb[i]);
    n = ya.size();
  } else {
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double d = static_cast<double>(a.data[i]) - b.data[i];
      sse += d * d;
    }
    n = a.data.size();
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(n) / sse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, bool on_y) {
  require_same(a, b);
  if (a.h < 11 || a.w < 11) throw ShapeError("SSIM needs at least 11x11 pixels");
  if (on_y) return ssim_plane(luma(a), luma(b), a.h, a.w);
  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) total += ssim_plane(channel(a, ch), channel(b, ch), a.h, a.w);
  return total / 3.0;
}

ImageBuffer shave(const ImageBuffer& img, int border) {
  if (border <= 0) return img;
  if (2 * border >= img.h || 2 * border >= img.w) throw RangeError("border crop removes the whole image");
  return crop(img, border, border, img.h - 2 * border, img.w - 2 * border);
}

double MetricReport::mean_psnr() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.psnr_db;
  return s / static_cast<double>(rows.size());
}

double MetricReport::mean_ssim() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.ssim;
  return s / static_cast<double>(rows.size());
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "image,psnr_db,ssim\n";
  for (const auto& r : rows) os << r.image << ',' << r.psnr_db << ',' << r.ssim << '\n';
  os << "MEAN," << mean_psnr() << ',' << mean_ssim() << '\n';
  return os.str();
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << to_csv();
}

MetricReport run_benchmark(const std::vector<std::pair<std::string, ImageBuffer>>& images, int scale,
                           const Upscaler& upscale, const BenchmarkOptions& opt) {
  if (images.empty()) throw RangeError("benchmark dataset is empty");
  if (scale < 1) throw RangeError("benchmark scale must be positive");
  MetricReport rep;
  rep.scale = scale;
  rep.on_y = opt.on_y;
  rep.border = opt.border < 0 ? scale : opt.border;
  for (const auto& [name, img] : images) {
    const ImageBuffer hr = mod_crop(img, scale);
    const ImageBuffer lr = quantize8(bicubic_resize(hr, scale, ResizeDirection::down));
    const ImageBuffer sr = quantize8(upscale(lr, scale));
    if (sr.h != hr.h || sr.w != hr.w) throw ShapeError("upscaler output extents differ from the HR image");
    const ImageBuffer a = shave(sr, rep.border), b = shave(hr, rep.border);
    rep.rows.push_back({name, psnr(a, b, opt.on_y), ssim(a, b, opt.on_y)});
  }
  return rep;
}

Upscaler bicubic_upscaler() {
  return [](const ImageBuffer& lr, double s) { return bicubic_resize(lr, s, ResizeDirection::up); };
}

}  // namespace c2d
