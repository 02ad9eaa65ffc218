#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "c2d/image.hpp"

namespace c2d {

using Rng = std::mt19937_64;

// One supervised high-resolution pixel: position in the HR crop and colour.
struct QuerySample {
  int row = 0;
  int col = 0;
  float rgb[3] = {0.0f, 0.0f, 0.0f};
};

struct TrainSample {
  ImageBuffer lr;                   // p x p
  double scale = 1.0;
  int hr_h = 0, hr_w = 0;           // HR crop extents
  std::vector<QuerySample> queries; // stage 1
  ImageBuffer hr;                   // stage 2 (and stage 1 when kept)
};

// ---- synthetic data -------------------------------------------------------

// Band-limited procedural image: smooth gradients, low-frequency gratings and
// antialiased shapes, quantized to 8 bits.
ImageBuffer synthetic_image(int h, int w, Rng& rng);

// Writes count images as <dir>/hr/img_NNNN.png.
void write_synthetic_set(const std::filesystem::path& dir, int count, int size, std::uint64_t seed);
std::vector<ImageBuffer> synthetic_set(int count, int size, std::uint64_t seed);

// Every *.png under <root>/hr, sorted by file name.
std::vector<std::filesystem::path> list_dataset(const std::filesystem::path& root);
std::vector<ImageBuffer> load_dataset(const std::filesystem::path& root);

// ---- sampling ---------------------------------------------------------------

struct Stage1Options {
  int lr_size = 32;
  int q_count = 1024;
  double scale_min = 1.0;
  double scale_max = 4.0;
  bool augment = true;
};

// Per item: s ~ U(scale_min, scale_max), HR crop floor(s p) square, LR the
// bicubic shrink to p x p, q_count HR pixels drawn uniformly with replacement.
std::vector<TrainSample> sample_stage1_batch(const std::vector<ImageBuffer>& pool, Rng& rng, int batch,
                                             const Stage1Options& opt);
TrainSample sample_stage1_item(const ImageBuffer& img, Rng& rng, const Stage1Options& opt);

struct Stage2Options {
  int lr_size = 32;
  int scale = 2;
  bool augment = true;
};

// Per item: HR crop s p square, LR its bicubic shrink by s.
std::vector<TrainSample> sample_stage2_batch(const std::vector<ImageBuffer>& pool, Rng& rng, int batch,
                                             const Stage2Options& opt);

// ---- augmentation -------------------------------------------------------------

// k quarter turns counter-clockwise after an optional horizontal flip.
struct Augmentation {
  int rotations = 0;
  bool flip = false;
};

Augmentation draw_augmentation(Rng& rng);
ImageBuffer apply_augmentation(const ImageBuffer& img, const Augmentation& a);
// Position (row, col) in an h x w image after the transform.
std::pair<int, int> augment_position(int row, int col, int h, int w, const Augmentation& a);
TrainSample augment(const TrainSample& sample, Rng& rng);
TrainSample augment(const TrainSample& sample, const Augmentation& a);

}  // namespace c2d
