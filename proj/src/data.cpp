#include "c2d/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "c2d/errors.hpp"

namespace c2d {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct Colour {
  double c[3];
};

Colour random_colour(Rng& rng) { return {{uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95)}}; }

// Coverage of a signed distance (negative inside) with a one-pixel ramp.
double coverage(double sd) { return std::clamp(0.5 - sd, 0.0, 1.0); }

void blend(std::vector<double>& canvas, std::size_t px, const Colour& col, double alpha) {
  for (int ch = 0; ch < 3; ++ch) canvas[px * 3 + ch] += alpha * (col.c[ch] - canvas[px * 3 + ch]);
}

}  // namespace

ImageBuffer synthetic_image(int h, int w, Rng& rng) {
  if (h < 1 || w < 1) throw RangeError("synthetic image extents must be positive");
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> canvas(n * 3);

  // Linear gradient background.
  const Colour a = random_colour(rng), b = random_colour(rng);
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(angle), gy = std::sin(angle);
  const double span = std::abs(gx) * w + std::abs(gy) * h;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double t = std::clamp(((c - w / 2.0) * gx + (r - h / 2.0) * gy) / span + 0.5, 0.0, 1.0);
      for (int ch = 0; ch < 3; ++ch) canvas[(static_cast<std::size_t>(r) * w + c) * 3 + ch] = a.c[ch] + t * (b.c[ch] - a.c[ch]);
    }

  // Low-frequency gratings.
  const int gratings = uniform_int(rng, 1, 2);
  for (int g = 0; g < gratings; ++g) {
    const double period = uniform(rng, 5.0, 24.0);
    const double theta = uniform(rng, 0.0, std::numbers::pi);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = uniform(rng, 0.04, 0.12);
    const Colour tint = random_colour(rng);
    const double kx = 2.0 * std::numbers::pi * std::cos(theta) / period;
    const double ky = 2.0 * std::numbers::pi * std::sin(theta) / period;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double v = amp * std::sin(kx * c + ky * r + phase);
        for (int ch = 0; ch < 3; ++ch) canvas[(static_cast<std::size_t>(r) * w + c) * 3 + ch] += v * (tint.c[ch] - 0.5) * 2.0;
      }
  }

  // Antialiased shapes: discs, rotated rectangles and strokes.
  const int shapes = uniform_int(rng, 24, 40);
  const double scale = std::min(h, w);
  for (int s = 0; s < shapes; ++s) {
    const int kind = uniform_int(rng, 0, 2);
    const Colour col = random_colour(rng);
    const double alpha = uniform(rng, 0.6, 1.0);
    const double cx = uniform(rng, 0.0, w), cy = uniform(rng, 0.0, h);
    const double rot = uniform(rng, 0.0, std::numbers::pi);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double r0 = uniform(rng, 0.02, 0.12) * scale;
    const double r1 = uniform(rng, 0.02, 0.12) * scale;
    const double thick = uniform(rng, 0.8, 3.5);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double dx = c + 0.5 - cx, dy = r + 0.5 - cy;
        double sd = 0.0;
        if (kind == 0) {
          sd = std::hypot(dx, dy) - r0;
        } else {
          const double u = dx * cr + dy * sr, v = -dx * sr + dy * cr;
          if (kind == 1) {
            const double qx = std::abs(u) - r0, qy = std::abs(v) - r1;
            sd = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) + std::min(std::max(qx, qy), 0.0);
          } else {
            const double along = std::clamp(u, -2.0 * r0, 2.0 * r0);
            sd = std::hypot(u - along, v) - thick / 2.0;
          }
        }
        if (sd > 1.0) continue;
        blend(canvas, static_cast<std::size_t>(r) * w + c, col, alpha * coverage(sd));
      }
  }

  ImageBuffer img(h, w);
  for (std::size_t i = 0; i < canvas.size(); ++i) img.data[i] = static_cast<float>(canvas[i]);
  return quantize8(img);
}

std::vector<ImageBuffer> synthetic_set(int count, int size, std::uint64_t seed) {
  if (count < 1) throw RangeError("synthetic set needs at least one image");
  Rng rng(seed);
  std::vector<ImageBuffer> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synthetic_image(size, size, rng));
  return out;
}

void write_synthetic_set(const std::filesystem::path& dir, int count, int size, std::uint64_t seed) {
  const auto images = synthetic_set(count, size, seed);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.png", i);
    save_png(images[i], dir / "hr" / name);
  }
}

std::vector<std::filesystem::path> list_dataset(const std::filesystem::path& root) {
  const auto dir = root / "hr";
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory missing: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no PNG images in " + dir.string());
  return files;
}

std::vector<ImageBuffer> load_dataset(const std::filesystem::path& root) {
  std::vector<ImageBuffer> out;
  for (const auto& p : list_dataset(root)) out.push_back(load_png(p));
  return out;
}

// ---- sampling -----------------------------------------------------------------

namespace {

const ImageBuffer& pick_image(const std::vector<ImageBuffer>& pool, Rng& rng, int need) {
  if (pool.empty()) throw RangeError("sampling from an empty image pool");
  for (int attempt = 0; attempt < 64; ++attempt) {
    const auto& img = pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool.size()) - 1))];
    if (img.h >= need && img.w >= need) return img;
  }
  throw RangeError("no image in the pool holds a " + std::to_string(need) + " pixel crop");
}

ImageBuffer random_crop(const ImageBuffer& img, Rng& rng, int size) {
  const int top = uniform_int(rng, 0, img.h - size);
  const int left = uniform_int(rng, 0, img.w - size);
  return crop(img, top, left, size, size);
}

}  // namespace

TrainSample sample_stage1_item(const ImageBuffer& img, Rng& rng, const Stage1Options& opt) {
  if (opt.lr_size < 1 || opt.q_count < 1) throw RangeError("stage-1 patch and query counts must be positive");
  if (!(opt.scale_min >= 1.0 && opt.scale_max >= opt.scale_min)) throw RangeError("bad stage-1 scale range");
  const double s = uniform(rng, opt.scale_min, opt.scale_max);
  const int hr = std::max(opt.lr_size, static_cast<int>(std::floor(s * opt.lr_size + 1e-9)));
  if (img.h < hr || img.w < hr) throw RangeError("image too small for a " + std::to_string(hr) + " pixel crop");
  TrainSample t;
  t.scale = s;
  t.hr = random_crop(img, rng, hr);
  t.hr_h = t.hr_w = hr;
  t.lr = resize_to(t.hr, opt.lr_size, opt.lr_size);
  t.queries.resize(static_cast<std::size_t>(opt.q_count));
  for (auto& q : t.queries) {
    q.row = uniform_int(rng, 0, hr - 1);
    q.col = uniform_int(rng, 0, hr - 1);
    for (int ch = 0; ch < 3; ++ch) q.rgb[ch] = t.hr.at(q.row, q.col, ch);
  }
  return opt.augment ? augment(t, rng) : t;
}

std::vector<TrainSample> sample_stage1_batch(const std::vector<ImageBuffer>& pool, Rng& rng, int batch,
                                             const Stage1Options& opt) {
  std::vector<TrainSample> out;
  out.reserve(static_cast<std::size_t>(batch));
  const int largest = static_cast<int>(std::floor(opt.scale_max * opt.lr_size + 1e-9));
  for (int i = 0; i < batch; ++i) out.push_back(sample_stage1_item(pick_image(pool, rng, largest), rng, opt));
  return out;
}

std::vector<TrainSample> sample_stage2_batch(const std::vector<ImageBuffer>& pool, Rng& rng, int batch,
                                             const Stage2Options& opt) {
  if (opt.scale < 1 || opt.lr_size < 1) throw RangeError("stage-2 scale and patch must be positive");
  const int hr = opt.scale * opt.lr_size;
  std::vector<TrainSample> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    TrainSample t;
    t.scale = opt.scale;
    t.hr = random_crop(pick_image(pool, rng, hr), rng, hr);
    t.hr_h = t.hr_w = hr;
    t.lr = bicubic_resize(t.hr, opt.scale, ResizeDirection::down);
    out.push_back(opt.augment ? augment(t, rng) : std::move(t));
  }
  return out;
}

// ---- augmentation -------------------------------------------------------------

Augmentation draw_augmentation(Rng& rng) {
  Augmentation a;
  a.rotations = uniform_int(rng, 0, 3);
  a.flip = uniform_int(rng, 0, 1) == 1;
  return a;
}

std::pair<int, int> augment_position(int row, int col, int h, int w, const Augmentation& a) {
  if (a.flip) col = w - 1 - col;
  for (int k = 0; k < ((a.rotations % 4) + 4) % 4; ++k) {
    const int r = w - 1 - col;
    col = row;
    row = r;
    std::swap(h, w);
  }
  return {row, col};
}

ImageBuffer apply_augmentation(const ImageBuffer& img, const Augmentation& a) {
  const bool swap = (((a.rotations % 4) + 4) % 4) % 2 == 1;
  ImageBuffer out(swap ? img.w : img.h, swap ? img.h : img.w);
  for (int r = 0; r < img.h; ++r)
    for (int c = 0; c < img.w; ++c) {
      const auto [rr, cc] = augment_position(r, c, img.h, img.w, a);
      for (int ch = 0; ch < 3; ++ch) out.at(rr, cc, ch) = img.at(r, c, ch);
    }
  return out;
}

TrainSample augment(const TrainSample& sample, const Augmentation& a) {
  TrainSample t = sample;
  t.lr = apply_augmentation(sample.lr, a);
  if (!sample.hr.empty()) t.hr = apply_augmentation(sample.hr, a);
  for (auto& q : t.queries) std::tie(q.row, q.col) = augment_position(q.row, q.col, sample.hr_h, sample.hr_w, a);
  if ((((a.rotations % 4) + 4) % 4) % 2 == 1) std::swap(t.hr_h, t.hr_w);
  return t;
}

TrainSample augment(const TrainSample& sample, Rng& rng) { return augment(sample, draw_augmentation(rng)); }

}  // namespace c2d
