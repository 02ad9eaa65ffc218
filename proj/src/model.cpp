#include "c2d/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "c2d/errors.hpp"
#include "c2d/image.hpp"
#include "c2d/ops.hpp"

namespace c2d {

std::string to_string(UpsamplerKind kind) { return kind == UpsamplerKind::continuous ? "continuous" : "discrete"; }

UpsamplerKind parse_upsampler(const std::string& text) {
  if (text == "continuous") return UpsamplerKind::continuous;
  if (text == "discrete") return UpsamplerKind::discrete;
  throw ConfigError("unknown upsampler '" + text + "' (expected continuous or discrete)");
}

void ModelConfig::validate() const {
  if (channels < 2 || channels % 2 != 0) throw ConfigError("model.channels must be even and >= 2");
  if (blocks < 1) throw ConfigError("model.blocks must be >= 1");
  if (windows.empty()) throw ConfigError("model.windows must not be empty");
  if (patch < 1) throw ConfigError("model.patch must be >= 1");
  if (ffn_ratio <= 0.0) throw ConfigError("model.ffn_ratio must be positive");
  if (ffn_dwconv_kernel < 0 || (ffn_dwconv_kernel > 0 && ffn_dwconv_kernel % 2 == 0)) {
    throw ConfigError("model.ffn_dwconv_kernel must be 0 or odd");
  }
  if (attn_heads < 1 || channels % attn_heads != 0) throw ConfigError("model.attn_heads must divide channels");
  if (upsampler == UpsamplerKind::continuous) {
    if (scale < 1.0 || scale > 4.0) throw ConfigError("continuous scale must lie in [1, 4]");
  } else {
    discrete_scale();
  }
}

int ModelConfig::discrete_scale() const {
  const double r = std::round(scale);
  if (std::abs(scale - r) > 1e-9 || r < 2.0 || r > 4.0) {
    throw ConfigError("discrete upsampler needs an integer scale in {2,3,4}, got " + std::to_string(scale));
  }
  return static_cast<int>(r);
}

HiETBlockConfig ModelConfig::block_config() const {
  HiETBlockConfig bc;
  bc.layer.channels = channels;
  bc.layer.ffn_ratio = ffn_ratio;
  bc.layer.ffn_dwconv_kernel = ffn_dwconv_kernel;
  bc.layer.hier_encoding = hier_encoding;
  bc.layer.embed_activation = embed_activation;
  bc.layer.ffn_prenorm = ffn_prenorm;
  bc.schedule = build_window_schedule(windows, patch, patch);
  bc.unet = unet;
  bc.block_conv = block_conv;
  bc.residual = block_residual;
  return bc;
}

std::string canonical_text(const ModelConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "channels=" << cfg.channels << '\n' << "blocks=" << cfg.blocks << '\n' << "windows=";
  for (std::size_t i = 0; i < cfg.windows.size(); ++i) os << (i ? "," : "") << cfg.windows[i];
  os << '\n'
     << "patch=" << cfg.patch << '\n'
     << "ffn_ratio=" << cfg.ffn_ratio << '\n'
     << "ffn_dwconv_kernel=" << cfg.ffn_dwconv_kernel << '\n'
     << "ffn_prenorm=" << cfg.ffn_prenorm << '\n'
     << "embed_activation=" << cfg.embed_activation << '\n'
     << "hier_encoding=" << cfg.hier_encoding << '\n'
     << "unet=" << cfg.unet << '\n'
     << "block_conv=" << cfg.block_conv << '\n'
     << "block_residual=" << cfg.block_residual << '\n'
     << "long_residual=" << cfg.long_residual << '\n'
     << "pad_to_window_multiple=" << cfg.pad_to_window_multiple << '\n'
     << "upsampler=" << to_string(cfg.upsampler) << '\n'
     << "scale=" << cfg.scale << '\n'
     << "attn_heads=" << cfg.attn_heads << '\n'
     << "mean_shift=" << cfg.mean_shift << '\n'
     << "hiif_unfold=" << cfg.hiif_unfold << '\n'
     << "image_skip=" << cfg.image_skip << '\n';
  return os.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const ModelConfig& cfg) { return fnv1a64(canonical_text(cfg)); }

// ---- functional pieces ------------------------------------------------------

QueryBatch full_grid_queries(double scale, int H, int W) {
  const LocalGrid grid = local_coord_grid(scale, H, W);
  QueryBatch q;
  q.feature_index = grid.feature_index;
  q.coords.reserve(grid.feature_index.size());
  const auto c = grid.coords.data();
  for (std::size_t i = 0; i < grid.feature_index.size(); ++i) q.coords.push_back({c[2 * i], c[2 * i + 1]});
  q.cell = cell_vector(scale, H, W);
  return q;
}

Tensor shift_mean(const Tensor& x, float sign) {
  if (x.rank() < 1 || x.shape().back() != 3) throw ShapeError("mean shift expects RGB as the last axis");
  std::vector<float> plane(x.numel());
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = sign * kRgbMean[i % 3];
  return add(x, Tensor::from(x.shape(), std::move(plane)));
}

Tensor bicubic_at_queries(const Tensor& img, const QueryBatch& queries) {
  if (img.rank() != 3 || img.dim(2) != 3) throw ShapeError("bicubic_at_queries expects an [H x W x 3] image");
  const auto H = static_cast<std::int64_t>(img.dim(0));
  const auto W = static_cast<std::int64_t>(img.dim(1));
  const float* px = img.data().data();
  const std::size_t m = queries.feature_index.size();
  std::vector<float> out(m * 3);
  for (std::size_t i = 0; i < m; ++i) {
    // Pixel centres sit at integer positions.
    const double y = static_cast<double>(queries.feature_index[i] / W) + queries.coords[i].y_local - 0.5;
    const double x = static_cast<double>(queries.feature_index[i] % W) + queries.coords[i].x_local - 0.5;
    const auto y0 = static_cast<std::int64_t>(std::floor(y));
    const auto x0 = static_cast<std::int64_t>(std::floor(x));
    double wy[4], wx[4];
    for (int t = 0; t < 4; ++t) {
      wy[t] = cubic_kernel(y - static_cast<double>(y0 - 1 + t));
      wx[t] = cubic_kernel(x - static_cast<double>(x0 - 1 + t));
    }
    double acc[3] = {0.0, 0.0, 0.0};
    for (int ty = 0; ty < 4; ++ty) {
      const std::int64_t r = std::clamp(y0 - 1 + ty, std::int64_t{0}, H - 1);
      for (int tx = 0; tx < 4; ++tx) {
        const std::int64_t c = std::clamp(x0 - 1 + tx, std::int64_t{0}, W - 1);
        const double w = wy[ty] * wx[tx];
        const float* p = px + (r * W + c) * 3;
        for (int k = 0; k < 3; ++k) acc[k] += w * p[k];
      }
    }
    for (int k = 0; k < 3; ++k) out[i * 3 + k] = static_cast<float>(acc[k]);
  }
  return Tensor::from({m, 3}, std::move(out));
}

Tensor shallow_extract(const Tensor& img, const ConvParams& p) {
  if (img.rank() != 3 || img.dim(2) != 3) {
    throw ShapeError("shallow_extract expects an [H x W x 3] image, got " + shape_str(img.shape()));
  }
  return conv2d_hwc(img, p.weight, p.bias);
}

Tensor deep_extract(const Tensor& shallow, const DeepParams& p) {
  Tensor h = shallow;
  for (const auto& block : p.blocks) h = p.unet ? hiet_block_forward(h, block) : linear_chain_forward(h, block);
  h = conv2d_hwc(h, p.conv.weight, p.conv.bias);
  return p.long_residual ? add(shallow, h) : h;
}

namespace {

Tensor apply(const Tensor& x, const LinearParams& p) { return linear(x, p.weight, p.bias); }

Tensor linear_attention(const Tensor& x, const HiifLParams& p) {
  const std::size_t c = x.dim(1);
  const std::size_t d = c / static_cast<std::size_t>(p.heads);
  Tensor q = elu_plus_one(apply(x, p.attn_q));
  Tensor k = elu_plus_one(apply(x, p.attn_k));
  Tensor v = apply(x, p.attn_v);
  std::vector<Tensor> heads;
  for (int h = 0; h < p.heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * d;
    Tensor qh = p.heads == 1 ? q : slice_last(q, off, d);
    Tensor kh = p.heads == 1 ? k : slice_last(k, off, d);
    Tensor vh = p.heads == 1 ? v : slice_last(v, off, d);
    Tensor kv = matmul(transpose(kh), vh);                    // [d x d]
    Tensor num = matmul(qh, kv);                              // [M x d]
    Tensor den = matmul(qh, transpose(sum_rows(kh)));         // [M x 1]
    heads.push_back(div_rows(num, den));
  }
  Tensor merged = p.heads == 1 ? heads[0] : concat_last(heads);
  return add(x, apply(merged, p.attn_out));
}

}  // namespace

Tensor hiifl_query(const Tensor& features, const QueryBatch& queries, const HiifLParams& p) {
  if (features.rank() != 3) throw ShapeError("HIIF-L expects [H x W x C] features");
  const std::size_t m = queries.feature_index.size();
  if (m == 0 || queries.coords.size() != m) throw ShapeError("HIIF-L query batch is empty or inconsistent");

  std::vector<float> level0(m * 4);
  std::vector<float> level1(m * 2);
  for (std::size_t i = 0; i < m; ++i) {
    const auto b0 = coord_hier_encoding(queries.coords[i], 0);
    const auto b1 = coord_hier_encoding(queries.coords[i], 1);
    level0[i * 4 + 0] = static_cast<float>(b0[0]);
    level0[i * 4 + 1] = static_cast<float>(b0[1]);
    level0[i * 4 + 2] = static_cast<float>(queries.cell.rows);
    level0[i * 4 + 3] = static_cast<float>(queries.cell.cols);
    level1[i * 2 + 0] = static_cast<float>(b1[0]);
    level1[i * 2 + 1] = static_cast<float>(b1[1]);
  }
  Tensor f = gather_rows(features, queries.feature_index, {m});
  if (p.unfold == 3) {
    const auto H = static_cast<std::int64_t>(features.dim(0));
    const auto W = static_cast<std::int64_t>(features.dim(1));
    std::vector<Tensor> parts;
    std::vector<std::int64_t> idx(m);
    for (std::int64_t dy = -1; dy <= 1; ++dy)
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::size_t i = 0; i < m; ++i) {
          const std::int64_t r = std::clamp(queries.feature_index[i] / W + dy, std::int64_t{0}, H - 1);
          const std::int64_t c = std::clamp(queries.feature_index[i] % W + dx, std::int64_t{0}, W - 1);
          idx[i] = r * W + c;
        }
        parts.push_back(dy == 0 && dx == 0 ? f : gather_rows(features, idx, {m}));
      }
    f = concat_last(parts);
  }
  Tensor h1 = gelu(apply(concat_last({f, Tensor::from({m, 4}, std::move(level0))}), p.mlp1));
  Tensor z0 = linear_attention(h1, p);
  Tensor z1 = gelu(apply(concat_last({z0, Tensor::from({m, 2}, std::move(level1))}), p.mlp2));
  return apply(z1, p.mlp3);
}

Tensor hiifl_upsample(const Tensor& features, double scale, const HiifLParams& p) {
  if (scale < 1.0 || scale > 4.0) throw RangeError("continuous scale " + std::to_string(scale) + " outside [1, 4]");
  const int H = static_cast<int>(features.dim(0));
  const int W = static_cast<int>(features.dim(1));
  const QueryBatch q = full_grid_queries(scale, H, W);
  const int oh = scaled_extent(scale, H);
  const int ow = scaled_extent(scale, W);
  return hiifl_query(features, q, p).reshape({static_cast<std::size_t>(oh), static_cast<std::size_t>(ow), 3});
}

Tensor pixelshuffle_upsample(const Tensor& features, int scale, const PixelShuffleParams& p) {
  if (scale < 2 || scale > 4) throw RangeError("discrete scale must be 2, 3 or 4");
  if (scale != p.scale) throw RangeError("upsampler was built for x" + std::to_string(p.scale));
  return pixel_shuffle_hwc(conv2d_hwc(features, p.conv.weight, p.conv.bias), static_cast<std::size_t>(scale));
}

// ---- Model -------------------------------------------------------------------

namespace {

LinearParams init_linear(Initializer& init, std::size_t in, std::size_t out) {
  return {init.uniform({out, in}, in), init.uniform({out}, in)};
}

ConvParams init_conv(Initializer& init, std::size_t in, std::size_t out, std::size_t k) {
  return {init.uniform({out, in, k, k}, in * k * k), init.uniform({out}, in * k * k)};
}

HiifLParams init_hiif(Initializer& init, std::size_t c, int heads, bool unfold) {
  HiifLParams p;
  p.heads = heads;
  p.unfold = unfold ? 3 : 1;
  p.mlp1 = init_linear(init, (unfold ? 9 * c : c) + 4, c);
  p.attn_q = init_linear(init, c, c);
  p.attn_k = init_linear(init, c, c);
  p.attn_v = init_linear(init, c, c);
  p.attn_out = init_linear(init, c, c);
  p.mlp2 = init_linear(init, c + 2, c);
  p.mlp3 = init_linear(init, c, 3);
  return p;
}

constexpr std::uint64_t kUpsamplerSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const HiETBlockConfig bc = cfg_.block_config();
  schedule_ = bc.schedule;
  Initializer init(seed);
  const auto c = static_cast<std::size_t>(cfg_.channels);
  shallow_ = init_conv(init, 3, c, 3);
  deep_.long_residual = cfg_.long_residual;
  deep_.unet = cfg_.unet;
  for (int b = 0; b < cfg_.blocks; ++b) deep_.blocks.push_back(init_hiet_block(bc, init));
  deep_.conv = init_conv(init, c, c, 3);
  reset_upsampler(cfg_.upsampler, cfg_.scale, seed ^ kUpsamplerSalt);
}

void Model::reset_upsampler(UpsamplerKind kind, double scale, std::uint64_t seed) {
  ModelConfig next = cfg_;
  next.upsampler = kind;
  next.scale = scale;
  next.validate();
  cfg_ = next;
  Initializer init(seed);
  const auto c = static_cast<std::size_t>(cfg_.channels);
  hiif_ = HiifLParams{};
  shuffle_ = PixelShuffleParams{};
  if (kind == UpsamplerKind::continuous) {
    hiif_ = init_hiif(init, c, cfg_.attn_heads, cfg_.hiif_unfold);
  } else {
    const int s = cfg_.discrete_scale();
    shuffle_.scale = s;
    shuffle_.conv = init_conv(init, c, static_cast<std::size_t>(3 * s * s), 3);
  }
  if (cfg_.image_skip) {
    // A zero head makes the untrained model equal to bicubic interpolation.
    LinearParams& head = hiif_.mlp3;
    ConvParams& conv = shuffle_.conv;
    for (Tensor* t : {&head.weight, &head.bias, &conv.weight, &conv.bias})
      if (t->defined()) *t = Tensor::zeros(t->shape(), true);
  }
  rebuild_table();
}

void Model::rebuild_table() {
  table_ = ParamTable{};
  table_.add("shallow.weight", shallow_.weight);
  table_.add("shallow.bias", shallow_.bias);
  for (std::size_t b = 0; b < deep_.blocks.size(); ++b) {
    deep_.blocks[b].register_into(table_, "deep.block" + std::to_string(b) + ".");
  }
  table_.add("deep.conv.weight", deep_.conv.weight);
  table_.add("deep.conv.bias", deep_.conv.bias);
  if (cfg_.upsampler == UpsamplerKind::continuous) {
    const std::pair<const char*, const LinearParams*> parts[] = {
        {"mlp1", &hiif_.mlp1},     {"attn_q", &hiif_.attn_q},     {"attn_k", &hiif_.attn_k},
        {"attn_v", &hiif_.attn_v}, {"attn_out", &hiif_.attn_out}, {"mlp2", &hiif_.mlp2},
        {"mlp3", &hiif_.mlp3}};
    for (const auto& [name, lp] : parts) {
      table_.add(std::string("up.hiif.") + name + ".weight", lp->weight);
      table_.add(std::string("up.hiif.") + name + ".bias", lp->bias);
    }
  } else {
    table_.add("up.shuffle.weight", shuffle_.conv.weight);
    table_.add("up.shuffle.bias", shuffle_.conv.bias);
  }
}

std::pair<int, int> padded_extents(const ModelConfig& cfg, int H, int W) {
  if (!cfg.pad_to_window_multiple) return {H, W};
  const auto sched = build_window_schedule(cfg.windows, cfg.patch, cfg.patch);
  int mh = 1, mw = 1;
  for (const auto& w : sched.layers()) {
    const auto g = make_geometry(w, H, W);
    mh = std::lcm(mh, g.h);
    mw = std::lcm(mw, g.w);
  }
  return {(H + mh - 1) / mh * mh, (W + mw - 1) / mw * mw};
}

Tensor Model::features(const Tensor& img) const {
  if (img.rank() != 3 || img.dim(2) != 3) throw ShapeError("model expects an [H x W x 3] image, got " + shape_str(img.shape()));
  const int H = static_cast<int>(img.dim(0));
  const int W = static_cast<int>(img.dim(1));
  const auto [ph, pw] = padded_extents(cfg_, H, W);
  const bool padded = ph != H || pw != W;
  Tensor x = cfg_.mean_shift ? shift_mean(img, -1.0f) : img;
  if (padded) x = pad_edge_hwc(x, static_cast<std::size_t>(ph - H), static_cast<std::size_t>(pw - W));
  Tensor f = deep_extract(shallow_extract(x, shallow_), deep_);
  return padded ? crop_hwc(f, static_cast<std::size_t>(H), static_cast<std::size_t>(W)) : f;
}

Tensor Model::upsample_queries(const Tensor& features, const QueryBatch& queries, const Tensor& img) const {
  if (cfg_.upsampler != UpsamplerKind::continuous) throw ConfigError("query evaluation needs the continuous upsampler");
  Tensor out = hiifl_query(features, queries, hiif_);
  if (cfg_.image_skip) return add(out, bicubic_at_queries(img, queries));
  return cfg_.mean_shift ? shift_mean(out, 1.0f) : out;
}

Tensor Model::upsample(const Tensor& features, double scale, const Tensor& img) const {
  const bool continuous = cfg_.upsampler == UpsamplerKind::continuous;
  Tensor out = continuous ? hiifl_upsample(features, scale, hiif_) : pixelshuffle_upsample(features, shuffle_.scale, shuffle_);
  if (!cfg_.image_skip) return cfg_.mean_shift ? shift_mean(out, 1.0f) : out;
  const double s = continuous ? scale : static_cast<double>(shuffle_.scale);
  const Tensor base = bicubic_at_queries(img, full_grid_queries(s, static_cast<int>(img.dim(0)), static_cast<int>(img.dim(1))));
  return add(out, base.reshape(out.shape()));
}

Tensor Model::forward(const Tensor& img, double scale) const {
  const double s = cfg_.upsampler == UpsamplerKind::continuous ? scale : cfg_.scale;
  return upsample(features(img), s, img);
}

}  // namespace c2d
