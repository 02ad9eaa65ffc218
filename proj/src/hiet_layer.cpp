#include "c2d/hiet_layer.hpp"

#include <cmath>
#include <vector>

#include "c2d/errors.hpp"
#include "c2d/ops.hpp"

namespace c2d {

std::pair<Tensor, WindowPartition> window_partition(const Tensor& x, const WindowGeometry& g) {
  validate(g);
  if (x.rank() != 3) throw ShapeError("window_partition expects [H x W x C], got " + shape_str(x.shape()));
  if (static_cast<int>(x.dim(0)) != g.H || static_cast<int>(x.dim(1)) != g.W) {
    throw ShapeError("window geometry does not match feature map " + shape_str(x.shape()));
  }
  WindowPartition meta;
  meta.H = g.H;
  meta.W = g.W;
  meta.h = g.h;
  meta.w = g.w;
  meta.windows_y = (g.H + g.h - 1) / g.h;
  meta.windows_x = (g.W + g.w - 1) / g.w;
  meta.padded_H = meta.windows_y * g.h;
  meta.padded_W = meta.windows_x * g.w;
  meta.pad_bottom = meta.padded_H - g.H;
  meta.pad_right = meta.padded_W - g.W;
  meta.channels = x.dim(2);

  const std::size_t area = static_cast<std::size_t>(g.h) * g.w;
  std::vector<std::int64_t> index(static_cast<std::size_t>(meta.window_count()) * area);
  std::size_t r = 0;
  for (int wy = 0; wy < meta.windows_y; ++wy)
    for (int wx = 0; wx < meta.windows_x; ++wx)
      for (int ly = 0; ly < g.h; ++ly)
        for (int lx = 0; lx < g.w; ++lx) {
          const int y = wy * g.h + ly;
          const int xx = wx * g.w + lx;
          index[r++] = (y < g.H && xx < g.W) ? static_cast<std::int64_t>(y) * g.W + xx : -1;
        }
  Tensor windows = gather_rows(x, index, {static_cast<std::size_t>(meta.window_count()), area});
  return {std::move(windows), meta};
}

Tensor window_reverse(const Tensor& windows, const WindowPartition& meta) {
  const std::size_t area = static_cast<std::size_t>(meta.h) * meta.w;
  if (windows.rank() != 3 || windows.dim(0) != static_cast<std::size_t>(meta.window_count()) ||
      windows.dim(1) != area) {
    throw ShapeError("window_reverse: tensor " + shape_str(windows.shape()) + " inconsistent with partition metadata");
  }
  if (meta.padded_H != meta.windows_y * meta.h || meta.padded_W != meta.windows_x * meta.w ||
      meta.H > meta.padded_H || meta.W > meta.padded_W || meta.H < 1 || meta.W < 1) {
    throw ShapeError("window_reverse: corrupt partition metadata");
  }
  std::vector<std::int64_t> index(static_cast<std::size_t>(meta.H) * meta.W);
  for (int y = 0; y < meta.H; ++y)
    for (int xx = 0; xx < meta.W; ++xx) {
      const int win = (y / meta.h) * meta.windows_x + xx / meta.w;
      const int local = (y % meta.h) * meta.w + xx % meta.w;
      index[static_cast<std::size_t>(y) * meta.W + xx] = static_cast<std::int64_t>(win) * static_cast<std::int64_t>(area) + local;
    }
  return gather_rows(windows, index, {static_cast<std::size_t>(meta.H), static_cast<std::size_t>(meta.W)});
}

Tensor csc(const Tensor& q, const Tensor& v, int h, int w) {
  if (q.shape() != v.shape()) {
    throw ShapeError("csc: Q " + shape_str(q.shape()) + " and V " + shape_str(v.shape()) + " differ");
  }
  if (h < 1 || w < 1) throw RangeError("csc: window extents must be positive");
  const float inv_area = 1.0f / static_cast<float>(h * w);
  if (q.rank() == 2) return scale(matmul(v, matmul(transpose(v), q)), inv_area);
  if (q.rank() == 3) return scale(bmm(v, bmm(transpose(v), q)), inv_area);
  throw ShapeError("csc expects rank 2 or 3 operands");
}

int ffn_hidden(int channels, double ratio) { return static_cast<int>(std::lround(ratio * channels)); }

void HiETLayerParams::register_into(ParamTable& table, const std::string& prefix) const {
  table.add(prefix + "embed.weight", embed_w);
  table.add(prefix + "embed.bias", embed_b);
  table.add(prefix + "out.weight", out_w);
  table.add(prefix + "out.bias", out_b);
  table.add(prefix + "out_norm.weight", out_norm_g);
  table.add(prefix + "out_norm.bias", out_norm_b);
  if (ffn_norm_g.defined()) {
    table.add(prefix + "ffn_norm.weight", ffn_norm_g);
    table.add(prefix + "ffn_norm.bias", ffn_norm_b);
  }
  table.add(prefix + "fc1.weight", fc1_w);
  table.add(prefix + "fc1.bias", fc1_b);
  if (dw_w.defined()) {
    table.add(prefix + "dwconv.weight", dw_w);
    table.add(prefix + "dwconv.bias", dw_b);
  }
  table.add(prefix + "fc2.weight", fc2_w);
  table.add(prefix + "fc2.bias", fc2_b);
}

HiETLayerParams init_hiet_layer(const HiETLayerConfig& cfg, Initializer& init) {
  if (cfg.channels < 2 || cfg.channels % 2 != 0) {
    throw ConfigError("HiET layer needs an even channel count, got " + std::to_string(cfg.channels));
  }
  const auto c = static_cast<std::size_t>(cfg.channels);
  const auto half = c / 2;
  const auto hidden = static_cast<std::size_t>(ffn_hidden(cfg.channels, cfg.ffn_ratio));
  if (hidden < 1) throw ConfigError("FFN ratio gives an empty hidden layer");
  const std::size_t embed_in = c + (cfg.hier_encoding ? 2 : 0);

  HiETLayerParams p;
  p.config = cfg;
  p.embed_w = init.uniform({c, embed_in}, embed_in);
  p.embed_b = init.uniform({c}, embed_in);
  p.out_w = init.uniform({c, half}, half);
  p.out_b = init.uniform({c}, half);
  p.out_norm_g = Initializer::ones({c});
  p.out_norm_b = Initializer::zeros({c});
  if (cfg.ffn_prenorm) {
    p.ffn_norm_g = Initializer::ones({c});
    p.ffn_norm_b = Initializer::zeros({c});
  }
  p.fc1_w = init.uniform({hidden, c}, c);
  p.fc1_b = init.uniform({hidden}, c);
  if (cfg.ffn_dwconv_kernel > 0) {
    const auto k = static_cast<std::size_t>(cfg.ffn_dwconv_kernel);
    if (k % 2 == 0) throw ConfigError("FFN depthwise kernel must be odd");
    p.dw_w = init.uniform({hidden, 1, k, k}, k * k);
    p.dw_b = init.uniform({hidden}, k * k);
  }
  p.fc2_w = init.uniform({c, hidden}, hidden);
  p.fc2_b = init.uniform({c}, hidden);
  return p;
}

Tensor hiet_layer_forward(const Tensor& x, const HiETLayerParams& p) {
  if (x.rank() != 3) throw ShapeError("HiET layer expects [H x W x C], got " + shape_str(x.shape()));
  const int H = static_cast<int>(x.dim(0));
  const int W = static_cast<int>(x.dim(1));
  const std::size_t c = x.dim(2);
  if (static_cast<int>(c) != p.config.channels) {
    throw ShapeError("HiET layer built for " + std::to_string(p.config.channels) + " channels, got " +
                     std::to_string(c));
  }
  const WindowGeometry g = make_geometry(p.config.window, H, W);

  Tensor embedded = p.config.hier_encoding ? concat_last({x, encoding_plane(g)}) : x;
  Tensor f0 = linear(embedded, p.embed_w, p.embed_b);
  if (p.config.embed_activation) f0 = gelu(f0);

  auto [windows, meta] = window_partition(f0, g);
  const std::size_t half = c / 2;
  Tensor q = slice_last(windows, 0, half);
  Tensor v = slice_last(windows, half, half);
  Tensor f1 = csc(q, v, g.h, g.w);
  Tensor f3 = window_reverse(f1, meta);
  Tensor f4 = layer_norm(linear(f3, p.out_w, p.out_b), p.out_norm_g, p.out_norm_b);

  Tensor y = add(x, f4);
  Tensor ffn_in = p.config.ffn_prenorm ? layer_norm(y, p.ffn_norm_g, p.ffn_norm_b) : y;
  Tensor hidden = gelu(linear(ffn_in, p.fc1_w, p.fc1_b));
  if (p.dw_w.defined()) hidden = add(hidden, gelu(depthwise_conv2d_hwc(hidden, p.dw_w, p.dw_b)));
  return add(y, linear(hidden, p.fc2_w, p.fc2_b));
}

}  // namespace c2d
