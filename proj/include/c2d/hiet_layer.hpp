#pragma once

#include <string>
#include <utility>

#include "c2d/encodings.hpp"
#include "c2d/params.hpp"
#include "c2d/tensor.hpp"

namespace c2d {

// Bookkeeping needed to undo window_partition.
struct WindowPartition {
  int H = 0;
  int W = 0;
  int h = 0;  // window height
  int w = 0;  // window width
  int padded_H = 0;
  int padded_W = 0;
  int windows_y = 0;
  int windows_x = 0;
  int pad_bottom = 0;
  int pad_right = 0;
  std::size_t channels = 0;

  int window_count() const { return windows_y * windows_x; }
};

// [H x W x C] -> [nWin x (h*w) x C], windows in row-major order, zero padding
// on the right/bottom when the window does not divide the map.
std::pair<Tensor, WindowPartition> window_partition(const Tensor& x, const WindowGeometry& g);
// Exact inverse of window_partition; the padded region is dropped.
Tensor window_reverse(const Tensor& windows, const WindowPartition& meta);

// Channel self-correlation: ((Q^T V) / (h w) . V^T)^T, computed as
// V (V^T Q) / (h w). Accepts one window [(h w) x d] or a batch
// [nWin x (h w) x d].
Tensor csc(const Tensor& q, const Tensor& v, int h, int w);

struct HiETLayerConfig {
  int channels = 16;
  double ffn_ratio = 2.0;
  int ffn_dwconv_kernel = 0;  // 0 disables the depthwise conv inside the FFN
  bool hier_encoding = true;
  bool embed_activation = true;  // GELU after the encoding MLP
  bool ffn_prenorm = true;       // y + FFN(LN(y)) instead of y + FFN(y)
  WindowSize window{8, 8};
};

int ffn_hidden(int channels, double ratio);

struct HiETLayerParams {
  HiETLayerConfig config;
  Tensor embed_w, embed_b;          // encoding MLP, (C+2) -> C
  Tensor out_w, out_b;              // C/2 -> C
  Tensor out_norm_g, out_norm_b;
  Tensor ffn_norm_g, ffn_norm_b;
  Tensor fc1_w, fc1_b;              // C -> rho C
  Tensor dw_w, dw_b;                // optional depthwise k x k on the hidden layer
  Tensor fc2_w, fc2_b;              // rho C -> C

  void register_into(ParamTable& table, const std::string& prefix) const;
};

HiETLayerParams init_hiet_layer(const HiETLayerConfig& cfg, Initializer& init);

Tensor hiet_layer_forward(const Tensor& x, const HiETLayerParams& p);

}  // namespace c2d
