#include "c2d/unet_block.hpp"

#include <algorithm>

#include "c2d/errors.hpp"
#include "c2d/ops.hpp"

namespace c2d {

std::vector<WindowSize> WindowSchedule::layers() const {
  std::vector<WindowSize> all = encoder;
  all.insert(all.end(), decoder.begin(), decoder.end());
  return all;
}

WindowSchedule build_window_schedule(std::span<const int> windows, int patch_h, int patch_w) {
  if (windows.empty()) throw ConfigError("window schedule is empty");
  if (patch_h < 1 || patch_w < 1) throw ConfigError("patch extents must be positive");
  for (int s : windows)
    if (s < 1) throw ConfigError("window sizes must be >= 1");

  const std::size_t n = windows.size();
  const auto first_min = static_cast<std::size_t>(std::min_element(windows.begin(), windows.end()) - windows.begin());
  std::size_t enc_count = first_min + 1;
  const std::size_t dec_count = n - enc_count;
  if (dec_count > enc_count || enc_count > dec_count + 1) enc_count = (n + 1) / 2;

  WindowSchedule sched;
  for (std::size_t i = 0; i < n; ++i) {
    WindowSize w{windows[i], windows[i]};
    if (w.w > patch_w || w.h > patch_h) {
      sched.warnings.push_back("window " + std::to_string(windows[i]) + " at layer " + std::to_string(i) +
                               " exceeds patch " + std::to_string(patch_h) + "x" + std::to_string(patch_w) +
                               "; clamped");
      w.w = std::min(w.w, patch_w);
      w.h = std::min(w.h, patch_h);
    }
    (i < enc_count ? sched.encoder : sched.decoder).push_back(w);
  }
  return sched;
}

void HiETBlockParams::register_into(ParamTable& table, const std::string& prefix) const {
  for (std::size_t i = 0; i < encoder.size(); ++i) encoder[i].register_into(table, prefix + "enc" + std::to_string(i) + ".");
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    decoder[i].register_into(table, prefix + "dec" + std::to_string(i) + ".");
    if (i < fuse_w.size()) {
      table.add(prefix + "fuse" + std::to_string(i) + ".weight", fuse_w[i]);
      table.add(prefix + "fuse" + std::to_string(i) + ".bias", fuse_b[i]);
    }
  }
  if (conv_w.defined()) {
    table.add(prefix + "conv.weight", conv_w);
    table.add(prefix + "conv.bias", conv_b);
  }
}

HiETBlockParams init_hiet_block(const HiETBlockConfig& cfg, Initializer& init) {
  if (cfg.schedule.encoder.empty()) throw ConfigError("block needs at least one encoder layer");
  if (cfg.schedule.decoder.size() > cfg.schedule.encoder.size()) {
    throw ConfigError("decoder has more layers than encoder");
  }
  HiETBlockParams p;
  p.config = cfg;
  auto make_layer = [&](WindowSize w) {
    HiETLayerConfig lc = cfg.layer;
    lc.window = w;
    return init_hiet_layer(lc, init);
  };
  const auto c = static_cast<std::size_t>(cfg.layer.channels);
  for (auto w : cfg.schedule.encoder) p.encoder.push_back(make_layer(w));
  for (auto w : cfg.schedule.decoder) {
    p.decoder.push_back(make_layer(w));
    if (cfg.unet) {
      p.fuse_w.push_back(init.uniform({c, 2 * c, 1, 1}, 2 * c));
      p.fuse_b.push_back(init.uniform({c}, 2 * c));
    }
  }
  if (cfg.block_conv) {
    p.conv_w = init.uniform({c, c, 3, 3}, 9 * c);
    p.conv_b = init.uniform({c}, 9 * c);
  }
  return p;
}

namespace {

Tensor finish_block(const Tensor& x, Tensor y, const HiETBlockParams& p) {
  if (p.conv_w.defined()) y = conv2d_hwc(y, p.conv_w, p.conv_b);
  return p.config.residual ? add(x, y) : y;
}

}  // namespace

Tensor hiet_block_forward(const Tensor& x, const HiETBlockParams& p) {
  if (p.fuse_w.size() != p.decoder.size()) {
    throw ConfigError("U-Net block needs one fusion conv per decoder layer");
  }
  std::vector<Tensor> enc_out;
  enc_out.reserve(p.encoder.size());
  Tensor h = x;
  for (const auto& layer : p.encoder) {
    h = hiet_layer_forward(h, layer);
    enc_out.push_back(h);
  }
  for (std::size_t k = 0; k < p.decoder.size(); ++k) {
    const Tensor& skip = enc_out[p.config.schedule.paired_encoder(k)];
    Tensor fused = conv2d_hwc(concat_last({h, skip}), p.fuse_w[k], p.fuse_b[k]);
    h = hiet_layer_forward(fused, p.decoder[k]);
  }
  return finish_block(x, std::move(h), p);
}

Tensor linear_chain_forward(const Tensor& x, const HiETBlockParams& p) {
  Tensor h = x;
  for (const auto& layer : p.encoder) h = hiet_layer_forward(h, layer);
  for (const auto& layer : p.decoder) h = hiet_layer_forward(h, layer);
  return finish_block(x, std::move(h), p);
}

}  // namespace c2d
