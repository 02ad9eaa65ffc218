#include <cmath>

#include "c2d/errors.hpp"
#include "c2d/hiet_layer.hpp"
#include "c2d/model.hpp"

namespace c2d {

std::uint64_t ComplexityReport::total_params() const {
  std::uint64_t n = 0;
  for (const auto& m : modules) n += m.params;
  return n;
}

std::uint64_t ComplexityReport::total_macs() const {
  std::uint64_t n = 0;
  for (const auto& m : modules) n += m.macs;
  return n;
}

namespace {

using u64 = std::uint64_t;

u64 conv_params(u64 in, u64 out, u64 k) { return out * in * k * k + out; }
u64 linear_params(u64 in, u64 out) { return out * in + out; }

// One HiET layer at feature extents ph x pw.
ModuleCost layer_cost(const ModelConfig& cfg, WindowSize window, int ph, int pw) {
  const u64 c = static_cast<u64>(cfg.channels);
  const u64 half = c / 2;
  const u64 hid = static_cast<u64>(ffn_hidden(cfg.channels, cfg.ffn_ratio));
  const u64 k = static_cast<u64>(cfg.ffn_dwconv_kernel);
  const u64 embed_in = c + (cfg.hier_encoding ? 2 : 0);
  const u64 pixels = static_cast<u64>(ph) * static_cast<u64>(pw);

  const WindowGeometry g = make_geometry(window, ph, pw);
  const u64 win_y = static_cast<u64>((ph + g.h - 1) / g.h);
  const u64 win_x = static_cast<u64>((pw + g.w - 1) / g.w);
  const u64 window_pixels = win_y * win_x * static_cast<u64>(g.h) * static_cast<u64>(g.w);

  ModuleCost m;
  m.params = linear_params(embed_in, c) + linear_params(half, c) + 2 * c + linear_params(c, hid) +
             linear_params(hid, c) + (cfg.ffn_prenorm ? 2 * c : 0) + (k > 0 ? hid * k * k + hid : 0);
  m.macs = pixels * embed_in * c           // embedding
           + window_pixels * 2 * half * half  // V (V^T Q)
           + pixels * half * c              // output projection
           + pixels * 2 * c * hid           // fc1, fc2
           + pixels * hid * k * k;          // depthwise conv
  return m;
}

}  // namespace

ComplexityReport complexity(const ModelConfig& cfg, int out_h, int out_w) {
  cfg.validate();
  if (out_h < 1 || out_w < 1) throw RangeError("output extents must be positive");
  const double s = cfg.upsampler == UpsamplerKind::continuous ? cfg.scale : cfg.discrete_scale();
  const int H = static_cast<int>(std::floor(out_h / s + 1e-9));
  const int W = static_cast<int>(std::floor(out_w / s + 1e-9));
  if (H < 1 || W < 1) throw RangeError("output extents too small for scale " + std::to_string(s));
  const auto [ph, pw] = padded_extents(cfg, H, W);
  const u64 c = static_cast<u64>(cfg.channels);
  const u64 padded = static_cast<u64>(ph) * static_cast<u64>(pw);

  ComplexityReport r;
  r.modules.push_back({"shallow", conv_params(3, c, 3), padded * 27 * c});

  const WindowSchedule sched = build_window_schedule(cfg.windows, cfg.patch, cfg.patch);
  for (int b = 0; b < cfg.blocks; ++b) {
    ModuleCost block{"deep.block" + std::to_string(b), 0, 0};
    for (const auto& w : sched.layers()) {
      const ModuleCost l = layer_cost(cfg, w, ph, pw);
      block.params += l.params;
      block.macs += l.macs;
    }
    if (cfg.unet) {
      const u64 fusions = sched.decoder.size();
      block.params += fusions * conv_params(2 * c, c, 1);
      block.macs += fusions * padded * 2 * c * c;
    }
    if (cfg.block_conv) {
      block.params += conv_params(c, c, 3);
      block.macs += padded * 9 * c * c;
    }
    r.modules.push_back(block);
  }
  r.modules.push_back({"deep.conv", conv_params(c, c, 3), padded * 9 * c * c});

  if (cfg.upsampler == UpsamplerKind::continuous) {
    const u64 queries = static_cast<u64>(scaled_extent(s, H)) * static_cast<u64>(scaled_extent(s, W));
    const u64 heads = static_cast<u64>(cfg.attn_heads);
    const u64 d = c / heads;
    const u64 in1 = (cfg.hiif_unfold ? 9 * c : c) + 4;
    const u64 params = linear_params(in1, c) + 4 * linear_params(c, c) + linear_params(c + 2, c) + linear_params(c, 3);
    const u64 per_query = in1 * c + 4 * c * c + heads * (2 * d * d + d) + (c + 2) * c + 3 * c;
    r.modules.push_back({"up.hiif", params, queries * per_query});
  } else {
    const u64 s2 = static_cast<u64>(cfg.discrete_scale()) * static_cast<u64>(cfg.discrete_scale());
    const u64 pixels = static_cast<u64>(H) * static_cast<u64>(W);
    r.modules.push_back({"up.shuffle", conv_params(c, 3 * s2, 3), pixels * 9 * c * 3 * s2});
  }
  return r;
}

std::uint64_t count_params(const ModelConfig& cfg) { return complexity(cfg, 64, 64).total_params(); }

std::uint64_t count_flops(const ModelConfig& cfg, int out_h, int out_w) {
  return complexity(cfg, out_h, out_w).total_macs();
}

}  // namespace c2d
