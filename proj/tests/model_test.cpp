#include <gtest/gtest.h>

#include <random>

#include "c2d/config.hpp"
#include "c2d/errors.hpp"
#include "c2d/image.hpp"
#include "c2d/model.hpp"
#include "c2d/ops.hpp"
#include "test_util.hpp"

using namespace c2d;
using c2d::test::gradient_error;
using c2d::test::random_tensor;

namespace {

ModelConfig toy(int c, UpsamplerKind kind, double scale) {
  ModelConfig cfg;
  cfg.channels = c;
  cfg.windows = {2, 1, 1, 2};
  cfg.patch = 4;
  cfg.upsampler = kind;
  cfg.scale = scale;
  return cfg;
}

ModelConfig desk(UpsamplerKind kind, double scale) {
  ModelConfig cfg;
  cfg.upsampler = kind;
  cfg.scale = scale;
  return cfg;
}

Tensor random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) { return random_tensor({h, w, 3}, rng, 0.f, 1.f, false); }

std::uint64_t counted_forward_macs(const Model& m, const Tensor& img, double s) {
  MacCounter counter;
  NoGradGuard guard;
  m.forward(img, s);
  return counter.count();
}

}  // namespace

// Per-layer sums for C = 16, rho = 2, hierarchical encoding on:
// embed 18*16+16, out 8*16+16, two LayerNorms 2*32, fc1 16*32+32, fc2 32*16+16.
TEST(ParamCount, DeskModelMatchesHandSummation) {
  const std::uint64_t layer = 304 + 144 + 64 + 544 + 528;
  const std::uint64_t block = 6 * layer + 3 * (32 * 16 + 16) + (16 * 16 * 9 + 16);
  const std::uint64_t backbone = (3 * 16 * 9 + 16) + block + (16 * 16 * 9 + 16);
  const std::uint64_t hiif = (20 * 16 + 16) + 4 * (16 * 16 + 16) + (18 * 16 + 16) + (16 * 3 + 3);
  const std::uint64_t shuffle = 12 * 16 * 9 + 12;

  const ModelConfig c1 = desk(UpsamplerKind::continuous, 2.0);
  const ModelConfig c2 = desk(UpsamplerKind::discrete, 2.0);
  EXPECT_EQ(count_params(c1), backbone + hiif);
  EXPECT_EQ(count_params(c2), backbone + shuffle);
  EXPECT_EQ(Model(c1, 1).params().scalar_count(), backbone + hiif);
  EXPECT_EQ(Model(c2, 1).params().scalar_count(), backbone + shuffle);
}

TEST(ParamCount, AnalyticMatchesParameterTableAcrossVariants) {
  for (int variant = 0; variant < 8; ++variant) {
    ModelConfig cfg = toy(6, variant % 2 ? UpsamplerKind::discrete : UpsamplerKind::continuous, 3.0);
    cfg.blocks = 1 + variant % 3;
    cfg.unet = variant != 2;
    cfg.hier_encoding = variant != 3;
    cfg.ffn_dwconv_kernel = variant >= 4 ? 3 : 0;
    cfg.block_conv = variant != 5;
    cfg.hiif_unfold = variant == 6;
    cfg.attn_heads = variant == 7 ? 3 : 1;
    EXPECT_EQ(count_params(cfg), Model(cfg, 2).params().scalar_count()) << "variant " << variant;
  }
}

TEST(ParamCount, ModulesAreAdditive) {
  const auto r = complexity(desk(UpsamplerKind::discrete, 2.0), 64, 64);
  std::uint64_t p = 0, m = 0;
  for (const auto& mod : r.modules) {
    p += mod.params;
    m += mod.macs;
  }
  EXPECT_EQ(p, r.total_params());
  EXPECT_EQ(m, r.total_macs());
  EXPECT_EQ(r.modules.front().name, "shallow");
}

TEST(FlopCount, AnalyticMatchesInstrumentedForward) {
  std::mt19937_64 rng(1);
  struct Case {
    ModelConfig cfg;
    std::size_t h, w;
    double s;
  };
  ModelConfig dw = toy(4, UpsamplerKind::discrete, 3.0);
  dw.ffn_dwconv_kernel = 3;
  ModelConfig unfold = toy(4, UpsamplerKind::continuous, 1.5);
  unfold.hiif_unfold = true;
  unfold.attn_heads = 2;
  ModelConfig skip = desk(UpsamplerKind::discrete, 2.0);
  skip.image_skip = true;
  const std::vector<Case> cases = {
      {desk(UpsamplerKind::continuous, 2.0), 20, 24, 2.0}, {desk(UpsamplerKind::discrete, 2.0), 16, 16, 2.0},
      {toy(4, UpsamplerKind::continuous, 2.5), 4, 6, 2.5},  {dw, 6, 5, 3.0},
      {unfold, 4, 4, 1.5},                                  {skip, 9, 11, 2.0}};
  for (const auto& c : cases) {
    const Model m(c.cfg, 3);
    const Tensor img = random_image(c.h, c.w, rng);
    const int oh = scaled_extent(c.s, int(c.h)), ow = scaled_extent(c.s, int(c.w));
    EXPECT_EQ(count_flops(c.cfg, oh, ow), counted_forward_macs(m, img, c.s)) << c.h << "x" << c.w << " s=" << c.s;
  }
}

TEST(FlopCount, PresetsMatchReferenceBudgets) {
  const auto swinir = preset("swinir-c2d-x4").stage2_model();
  const auto srformer = preset("srformer-c2d-x4").stage2_model();
  EXPECT_NEAR(double(count_params(swinir)), 775e3, 0.05 * 775e3);
  EXPECT_NEAR(double(count_flops(swinir, 720, 1280)), 52.7e9, 0.10 * 52.7e9);
  EXPECT_NEAR(double(count_params(srformer)), 849e3, 0.05 * 849e3);
  EXPECT_NEAR(double(count_flops(srformer, 720, 1280)), 57.0e9, 0.10 * 57.0e9);
}

TEST(FlopCount, RejectsDegenerateExtents) {
  EXPECT_THROW(count_flops(desk(UpsamplerKind::discrete, 4.0), 3, 3), RangeError);
}

TEST(Upsamplers, ContinuousShapeLaw) {
  std::mt19937_64 rng(2);
  const Model m(toy(4, UpsamplerKind::continuous, 2.0), 1);
  Tensor f = m.features(random_image(8, 8, rng));
  EXPECT_EQ(m.upsample(f, 2.0, random_image(8, 8, rng)).shape(), (Shape{16, 16, 3}));
}

TEST(Upsamplers, ContinuousExtentsFloorForRealScales) {
  std::mt19937_64 rng(3);
  const Model m(toy(4, UpsamplerKind::continuous, 2.0), 1);
  for (double s : {1.0, 1.5, 2.3, 3.7, 4.0}) {
    const Tensor img = random_image(7, 5, rng);
    const Tensor out = m.forward(img, s);
    EXPECT_EQ(out.shape(), (Shape{std::size_t(scaled_extent(s, 7)), std::size_t(scaled_extent(s, 5)), 3}));
  }
  EXPECT_THROW(m.forward(random_image(4, 4, rng), 4.5), RangeError);
  EXPECT_THROW(m.forward(random_image(4, 4, rng), 0.5), RangeError);
}

TEST(Upsamplers, DiscreteShapeLaw) {
  std::mt19937_64 rng(4);
  for (int s : {2, 3, 4}) {
    const Model m(toy(4, UpsamplerKind::discrete, s), 1);
    EXPECT_EQ(m.forward(random_image(8, 6, rng), 0.0).shape(), (Shape{8u * s, 6u * s, 3}));
  }
  ModelConfig bad = toy(4, UpsamplerKind::discrete, 2.5);
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Upsamplers, ExactlyThreeMlpsAroundAttention) {
  const Model m(desk(UpsamplerKind::continuous, 2.0), 1);
  int mlps = 0, attention = 0;
  for (const auto& [name, t] : m.params().entries()) {
    if (!name.starts_with("up.hiif.") || !name.ends_with(".weight")) continue;
    (name.find(".mlp") != std::string::npos ? mlps : attention) += 1;
  }
  EXPECT_EQ(mlps, 3);
  EXPECT_EQ(attention, 4);
}

TEST(Model, StagesShareBackboneShapes) {
  const Model a(desk(UpsamplerKind::continuous, 2.0), 1), b(desk(UpsamplerKind::discrete, 4.0), 1);
  std::vector<std::pair<std::string, Shape>> sa, sb;
  for (const auto& [n, t] : a.params().entries())
    if (!n.starts_with("up.")) sa.emplace_back(n, t.shape());
  for (const auto& [n, t] : b.params().entries())
    if (!n.starts_with("up.")) sb.emplace_back(n, t.shape());
  EXPECT_EQ(sa, sb);
  EXPECT_FALSE(sa.empty());
}

TEST(Model, DeterministicUnderSeed) {
  std::mt19937_64 rng(5);
  const Tensor img = random_image(12, 10, rng);
  const Model a(desk(UpsamplerKind::continuous, 2.0), 9), b(desk(UpsamplerKind::continuous, 2.0), 9);
  NoGradGuard guard;
  const Tensor ya = a.forward(img, 2.0), yb = b.forward(img, 2.0);
  EXPECT_EQ(std::vector<float>(ya.data().begin(), ya.data().end()), std::vector<float>(yb.data().begin(), yb.data().end()));
  const Model c(desk(UpsamplerKind::continuous, 2.0), 10);
  EXPECT_NE(c2d::test::max_abs_diff(c.forward(img, 2.0).data(), ya.data()), 0.0);
}

TEST(Model, PaddingToWindowMultipleKeepsExtents) {
  const ModelConfig cfg = desk(UpsamplerKind::discrete, 2.0);
  EXPECT_EQ(padded_extents(cfg, 32, 32), (std::pair{32, 32}));
  EXPECT_EQ(padded_extents(cfg, 20, 33), (std::pair{32, 48}));
  std::mt19937_64 rng(6);
  const Model m(cfg, 1);
  EXPECT_EQ(m.features(random_image(20, 33, rng)).shape(), (Shape{20, 33, 16}));
}

TEST(Model, MeanShiftRoundTrip) {
  std::mt19937_64 rng(7);
  const Tensor x = random_image(3, 4, rng);
  EXPECT_LT(c2d::test::max_abs_diff(shift_mean(shift_mean(x, -1.f), 1.f).data(), x.data()), 1e-6);
  EXPECT_THROW(shift_mean(Tensor::zeros({2, 2}), 1.f), ShapeError);
}

TEST(Model, ImageSkipStartsAtBicubic) {
  std::mt19937_64 rng(8);
  const ImageBuffer lr = from_tensor(random_image(9, 7, rng));
  for (auto kind : {UpsamplerKind::discrete, UpsamplerKind::continuous}) {
    ModelConfig cfg = desk(kind, 3.0);
    cfg.image_skip = true;
    const Model m(cfg, 1);
    NoGradGuard guard;
    const Tensor out = m.forward(to_tensor(lr), 3.0);
    const ImageBuffer ref = bicubic_resize(lr, 3.0, ResizeDirection::up, false);
    EXPECT_LT(c2d::test::max_abs_diff(out.data(), ref.data), 1e-5);
  }
}

TEST(Model, BicubicAtQueriesMatchesResizerOffTheIntegerGrid) {
  std::mt19937_64 rng(9);
  const ImageBuffer lr = from_tensor(random_image(6, 8, rng));
  const double s = 2.5;
  const QueryBatch q = full_grid_queries(s, 6, 8);
  const Tensor got = bicubic_at_queries(to_tensor(lr), q);
  const ImageBuffer ref = resize_to(lr, scaled_extent(s, 6), scaled_extent(s, 8), false);
  EXPECT_LT(c2d::test::max_abs_diff(got.data(), ref.data), 1e-5);
}

TEST(Model, ConfigHashTracksEveryField) {
  const ModelConfig base = desk(UpsamplerKind::continuous, 2.0);
  std::vector<ModelConfig> variants(6, base);
  variants[0].channels = 18;
  variants[1].windows = {8, 4, 4, 8};
  variants[2].image_skip = true;
  variants[3].hiif_unfold = true;
  variants[4].scale = 3.0;
  variants[5].mean_shift = false;
  for (const auto& v : variants) EXPECT_NE(config_hash(v), config_hash(base));
  EXPECT_EQ(config_hash(base), config_hash(desk(UpsamplerKind::continuous, 2.0)));
}

TEST(ModelGradient, ShallowAndDeepExtractors) {
  std::mt19937_64 rng(10);
  const Model m(toy(4, UpsamplerKind::discrete, 2.0), 11);
  std::vector<Tensor> params;
  for (const auto& [n, t] : m.params().entries())
    if (!n.starts_with("up.")) params.push_back(t);
  Tensor img = random_tensor({4, 4, 3}, rng, 0.f, 1.f);
  params.push_back(img);
  EXPECT_LT(gradient_error([&] { return m.features(img); }, params), 1e-2);
}

TEST(ModelGradient, ContinuousUpsamplerAtFractionalScale) {
  std::mt19937_64 rng(12);
  for (bool unfold : {false, true}) {
    ModelConfig cfg = toy(4, UpsamplerKind::continuous, 1.5);
    cfg.hiif_unfold = unfold;
    cfg.attn_heads = 2;
    const Model m(cfg, 13);
    std::vector<Tensor> params;
    for (const auto& [n, t] : m.params().entries())
      if (n.starts_with("up.")) params.push_back(t);
    Tensor f = random_tensor({4, 4, 4}, rng);
    params.push_back(f);
    const Tensor img = random_image(4, 4, rng);
    EXPECT_LT(gradient_error([&] { return m.upsample(f, 1.5, img); }, params), 1e-3) << "unfold " << unfold;
  }
}

TEST(ModelGradient, PixelShuffleUpsampler) {
  std::mt19937_64 rng(14);
  const Model m(toy(4, UpsamplerKind::discrete, 2.0), 15);
  std::vector<Tensor> params;
  for (const auto& [n, t] : m.params().entries())
    if (n.starts_with("up.")) params.push_back(t);
  Tensor f = random_tensor({3, 4, 4}, rng);
  params.push_back(f);
  const Tensor img = random_image(3, 4, rng);
  EXPECT_LT(gradient_error([&] { return m.upsample(f, 2.0, img); }, params), 1e-3);
}

TEST(ModelGradient, FullModelBothStages) {
  std::mt19937_64 rng(16);
  for (auto kind : {UpsamplerKind::continuous, UpsamplerKind::discrete}) {
    const Model m(toy(4, kind, 2.0), 17);
    const Tensor img = random_image(4, 4, rng);
    EXPECT_LT(gradient_error([&] { return m.forward(img, 2.0); }, m.trainable()), 1e-2);
  }
}
