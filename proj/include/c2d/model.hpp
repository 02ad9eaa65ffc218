#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2d/encodings.hpp"
#include "c2d/params.hpp"
#include "c2d/unet_block.hpp"

namespace c2d {

enum class UpsamplerKind { continuous, discrete };

std::string to_string(UpsamplerKind kind);
UpsamplerKind parse_upsampler(const std::string& text);

struct ModelConfig {
  int channels = 16;
  int blocks = 1;
  std::vector<int> windows{16, 8, 4, 4, 8, 16};
  int patch = 32;  // training LR patch; windows are clamped to it
  double ffn_ratio = 2.0;
  int ffn_dwconv_kernel = 0;
  bool ffn_prenorm = true;
  bool embed_activation = true;
  bool hier_encoding = true;
  bool unet = true;
  bool block_conv = true;
  bool block_residual = true;
  bool long_residual = true;
  bool pad_to_window_multiple = true;
  UpsamplerKind upsampler = UpsamplerKind::continuous;
  double scale = 2.0;  // integer for discrete models
  int attn_heads = 1;  // linear attention heads in the continuous upsampler
  // Continuous upsampler reads the 3x3 neighbourhood of the nearest feature.
  bool hiif_unfold = false;
  // Subtract a fixed RGB mean before f_S and add it back after the upsampler.
  bool mean_shift = true;
  // The upsampler predicts a residual over bicubic interpolation of the LR
  // input; the mean is then not added back and the head starts at zero.
  bool image_skip = false;

  // Throws ConfigError on violated invariants.
  void validate() const;
  int discrete_scale() const;
  HiETBlockConfig block_config() const;
};

// key=value lines over every architecture field, in a fixed order.
std::string canonical_text(const ModelConfig& cfg);
// FNV-1a 64 of canonical_text.
std::uint64_t config_hash(const ModelConfig& cfg);
std::uint64_t fnv1a64(const std::string& text);

struct ConvParams {
  Tensor weight;
  Tensor bias;
};

struct LinearParams {
  Tensor weight;
  Tensor bias;
};

// Lightweight implicit image function: three MLPs around a linear attention.
struct HiifLParams {
  LinearParams mlp1;  // C + 2 (level-0 code) + 2 (cell) -> C
  LinearParams attn_q, attn_k, attn_v, attn_out;
  LinearParams mlp2;  // C + 2 (level-1 code) -> C
  LinearParams mlp3;  // C -> 3
  int heads = 1;
  int unfold = 1;  // 3: mlp1 reads the 3x3 feature neighbourhood (9C + 4 inputs)
};

struct PixelShuffleParams {
  ConvParams conv;  // C -> 3 s^2, 3x3
  int scale = 2;
};

struct DeepParams {
  std::vector<HiETBlockParams> blocks;
  ConvParams conv;
  bool long_residual = true;
  bool unet = true;
};

// Query set for the continuous upsampler: feature rows, local coordinates,
// and the shared cell vector.
struct QueryBatch {
  std::vector<std::int64_t> feature_index;
  std::vector<QueryCoord> coords;
  CellVector cell;
};

QueryBatch full_grid_queries(double scale, int H, int W);

inline constexpr float kRgbMean[3] = {0.4488f, 0.4371f, 0.4040f};
// Adds sign * kRgbMean to every pixel of a [... x 3] tensor.
Tensor shift_mean(const Tensor& x, float sign);
// Bicubic samples of an [H x W x 3] image at the query positions -> [M x 3].
// Constant with respect to the graph.
Tensor bicubic_at_queries(const Tensor& img, const QueryBatch& queries);

Tensor shallow_extract(const Tensor& img, const ConvParams& p);
Tensor deep_extract(const Tensor& shallow, const DeepParams& p);
// Evaluates the implicit function at the given queries -> [M x 3].
Tensor hiifl_query(const Tensor& features, const QueryBatch& queries, const HiifLParams& p);
// Full output grid -> [floor(sH) x floor(sW) x 3].
Tensor hiifl_upsample(const Tensor& features, double scale, const HiifLParams& p);
Tensor pixelshuffle_upsample(const Tensor& features, int scale, const PixelShuffleParams& p);

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const WindowSchedule& schedule() const { return schedule_; }
  const ParamTable& params() const { return table_; }
  std::vector<Tensor> trainable() const { return table_.tensors(); }

  // LR image [H x W x 3] -> deep features [H x W x C] (padding applied and
  // removed internally).
  Tensor features(const Tensor& img) const;
  // img is the LR input the features were computed from (read by the image skip).
  Tensor upsample_queries(const Tensor& features, const QueryBatch& queries, const Tensor& img) const;
  Tensor upsample(const Tensor& features, double scale, const Tensor& img) const;
  // Full super-resolution. scale is ignored by discrete models.
  Tensor forward(const Tensor& img, double scale) const;

  // Replaces the upsampler with a freshly initialized one of the given kind.
  void reset_upsampler(UpsamplerKind kind, double scale, std::uint64_t seed);

  const ConvParams& shallow() const { return shallow_; }
  const DeepParams& deep() const { return deep_; }

 private:
  void rebuild_table();

  ModelConfig cfg_;
  WindowSchedule schedule_;
  ConvParams shallow_;
  DeepParams deep_;
  HiifLParams hiif_;
  PixelShuffleParams shuffle_;
  ParamTable table_;
};

// ---- complexity accounting ------------------------------------------------

struct ModuleCost {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

struct ComplexityReport {
  std::vector<ModuleCost> modules;
  std::uint64_t total_params() const;
  std::uint64_t total_macs() const;
};

// Analytic accounting for an output of out_h x out_w pixels (input extents
// floor(out / s)). MACs count every multiply-accumulate of conv, linear, CSC
// and attention kernels; norms and activations are free.
ComplexityReport complexity(const ModelConfig& cfg, int out_h, int out_w);
std::uint64_t count_params(const ModelConfig& cfg);
// Mult-Adds, the figure SR tables report as FLOPs.
std::uint64_t count_flops(const ModelConfig& cfg, int out_h, int out_w);

// Extents the model pads an H x W input to before feature extraction.
std::pair<int, int> padded_extents(const ModelConfig& cfg, int H, int W);

}  // namespace c2d
