#include "c2d/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "c2d/encodings.hpp"
#include "c2d/errors.hpp"

namespace c2d {

ImageBuffer::ImageBuffer(int height, int width, float fill) : h(height), w(width) {
  if (height < 1 || width < 1) throw ShapeError("image extents must be positive");
  data.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

ImageBuffer load_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("corrupt PNG " + path.string() + ": " + msg);
  }
  ImageBuffer img(static_cast<int>(image.height), static_cast<int>(image.width));
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

namespace {

png_byte to_byte(float v) { return static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

void save_png(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.empty()) throw ShapeError("cannot save an empty image");
  std::vector<png_byte> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.data[i]);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.w);
  image.height = static_cast<png_uint_32>(img.h);
  image.format = PNG_FORMAT_RGB;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

ImageBuffer quantize8(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (auto& v : out.data) v = static_cast<float>(to_byte(v)) / 255.0f;
  return out;
}

ImageBuffer clamp01(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

Tensor to_tensor(const ImageBuffer& img) {
  return Tensor::from({static_cast<std::size_t>(img.h), static_cast<std::size_t>(img.w), 3}, img.data);
}

ImageBuffer from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(2) != 3) throw ShapeError("expected an [H x W x 3] tensor, got " + shape_str(t.shape()));
  ImageBuffer img(static_cast<int>(t.dim(0)), static_cast<int>(t.dim(1)));
  const auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) img.data[i] = std::clamp(d[i], 0.0f, 1.0f);
  return img;
}

ImageBuffer crop(const ImageBuffer& img, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > img.h || left + w > img.w) {
    throw RangeError("crop window outside " + std::to_string(img.h) + "x" + std::to_string(img.w) + " image");
  }
  ImageBuffer out(h, w);
  for (int r = 0; r < h; ++r) {
    const float* src = &img.data[(static_cast<std::size_t>(top + r) * img.w + left) * 3];
    std::copy(src, src + static_cast<std::size_t>(w) * 3, &out.data[static_cast<std::size_t>(r) * w * 3]);
  }
  return out;
}

ImageBuffer mod_crop(const ImageBuffer& img, int s) {
  if (s < 1) throw RangeError("mod_crop factor must be positive");
  const int h = img.h / s * s;
  const int w = img.w / s * s;
  if (h < 1 || w < 1) throw RangeError("image smaller than scale factor");
  return crop(img, 0, 0, h, w);
}

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<int> index;
  std::vector<double> weight;
  int width = 0;  // taps per output sample
};

// Resampling taps along one axis of length n_in -> n_out.
Taps axis_taps(int n_in, int n_out, bool antialias) {
  const double ratio = static_cast<double>(n_out) / n_in;
  const double stretch = (antialias && ratio < 1.0) ? ratio : 1.0;
  const double support = 2.0 / stretch;
  Taps t;
  t.width = static_cast<int>(std::ceil(2.0 * support)) + 2;
  t.index.resize(static_cast<std::size_t>(n_out) * t.width);
  t.weight.resize(t.index.size());
  for (int o = 0; o < n_out; ++o) {
    const double centre = (o + 0.5) / ratio - 0.5;
    const int first = static_cast<int>(std::floor(centre - support)) ;
    double total = 0.0;
    for (int k = 0; k < t.width; ++k) {
      const int j = first + k;
      const double wgt = cubic_kernel((centre - j) * stretch);
      t.index[static_cast<std::size_t>(o) * t.width + k] = std::clamp(j, 0, n_in - 1);
      t.weight[static_cast<std::size_t>(o) * t.width + k] = wgt;
      total += wgt;
    }
    for (int k = 0; k < t.width; ++k) t.weight[static_cast<std::size_t>(o) * t.width + k] /= total;
  }
  return t;
}

}  // namespace

ImageBuffer resize_to(const ImageBuffer& img, int out_h, int out_w, bool antialias) {
  if (img.empty()) throw ShapeError("cannot resize an empty image");
  if (out_h < 1 || out_w < 1) throw RangeError("resize target extents must be positive");
  const Taps th = axis_taps(img.h, out_h, antialias);
  const Taps tw = axis_taps(img.w, out_w, antialias);

  // Rows first (vertical pass), then columns, in double.
  std::vector<double> mid(static_cast<std::size_t>(out_h) * img.w * 3, 0.0);
  for (int o = 0; o < out_h; ++o)
    for (int k = 0; k < th.width; ++k) {
      const double wgt = th.weight[static_cast<std::size_t>(o) * th.width + k];
      if (wgt == 0.0) continue;
      const float* src = &img.data[static_cast<std::size_t>(th.index[static_cast<std::size_t>(o) * th.width + k]) * img.w * 3];
      double* dst = &mid[static_cast<std::size_t>(o) * img.w * 3];
      for (int i = 0; i < img.w * 3; ++i) dst[i] += wgt * src[i];
    }
  ImageBuffer out(out_h, out_w);
  for (int r = 0; r < out_h; ++r)
    for (int o = 0; o < out_w; ++o)
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < tw.width; ++k) {
          const std::size_t t = static_cast<std::size_t>(o) * tw.width + k;
          acc += tw.weight[t] * mid[(static_cast<std::size_t>(r) * img.w + tw.index[t]) * 3 + ch];
        }
        out.at(r, o, ch) = static_cast<float>(acc);
      }
  return out;
}

ImageBuffer bicubic_resize(const ImageBuffer& img, double s, ResizeDirection dir, bool antialias) {
  if (!(s > 0.0) || !std::isfinite(s)) throw RangeError("resize factor must be positive");
  if (img.empty()) throw ShapeError("cannot resize an empty image");
  if (dir == ResizeDirection::down) {
    const int oh = static_cast<int>(std::ceil(img.h / s - 1e-9));
    const int ow = static_cast<int>(std::ceil(img.w / s - 1e-9));
    if (oh < 1 || ow < 1) throw RangeError("degenerate resize output");
    return resize_to(img, oh, ow, antialias);
  }
  const int oh = scaled_extent(s, img.h);
  const int ow = scaled_extent(s, img.w);
  if (oh < 1 || ow < 1) throw RangeError("degenerate resize output");
  return resize_to(img, oh, ow, antialias);
}

}  // namespace c2d
