#pragma once

#include <span>
#include <string>
#include <vector>

#include "c2d/hiet_layer.hpp"

namespace c2d {

// Per-layer windows of one block. Decoder layer k (in execution order) reads
// the previous decoder output (or the last encoder output for k = 0) and the
// output of encoder layer paired_encoder(k).
struct WindowSchedule {
  std::vector<WindowSize> encoder;
  std::vector<WindowSize> decoder;
  std::vector<std::string> warnings;

  std::size_t layer_count() const { return encoder.size() + decoder.size(); }
  std::size_t paired_encoder(std::size_t k) const { return decoder.size() - 1 - k; }
  // All windows in execution order.
  std::vector<WindowSize> layers() const;
};

// Splits a window profile at its first minimum: the prefix through the
// minimum is the encoder, the rest the decoder. Profiles where that split is
// unbalanced (decoder longer than encoder, or encoder more than one longer)
// fall back to an encoder of ceil(n/2) layers. Sizes larger than the patch
// are clamped with a warning.
WindowSchedule build_window_schedule(std::span<const int> windows, int patch_h, int patch_w);

struct HiETBlockConfig {
  HiETLayerConfig layer;  // window field ignored; taken from the schedule
  WindowSchedule schedule;
  bool unet = true;        // false: plain sequential chain, no fusion convs
  bool block_conv = false; // trailing 3x3 conv inside the block
  bool residual = true;    // block output += block input
};

struct HiETBlockParams {
  HiETBlockConfig config;
  std::vector<HiETLayerParams> encoder;
  std::vector<HiETLayerParams> decoder;
  std::vector<Tensor> fuse_w;  // [C x 2C x 1 x 1] per decoder layer
  std::vector<Tensor> fuse_b;
  Tensor conv_w, conv_b;

  void register_into(ParamTable& table, const std::string& prefix) const;
};

HiETBlockParams init_hiet_block(const HiETBlockConfig& cfg, Initializer& init);

// U-Net arrangement: encoder bottom-up, decoder inputs fused by 1x1 conv
// from [previous decoder output, paired encoder output].
Tensor hiet_block_forward(const Tensor& x, const HiETBlockParams& p);
// The same layers composed sequentially without any fusion.
Tensor linear_chain_forward(const Tensor& x, const HiETBlockParams& p);

}  // namespace c2d
