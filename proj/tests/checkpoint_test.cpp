#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "c2d/checkpoint.hpp"
#include "c2d/errors.hpp"
#include "c2d/ops.hpp"
#include "test_util.hpp"

using namespace c2d;

namespace {

ModelConfig small(UpsamplerKind kind, double scale) {
  ModelConfig cfg;
  cfg.channels = 4;
  cfg.windows = {2, 1, 1, 2};
  cfg.patch = 4;
  cfg.upsampler = kind;
  cfg.scale = scale;
  return cfg;
}

void expect_same_params(const Model& a, const Model& b, const std::string& prefix = "") {
  for (const auto& [name, t] : a.params().entries()) {
    if (!name.starts_with(prefix)) continue;
    const Tensor* other = b.params().find(name);
    ASSERT_NE(other, nullptr) << name;
    EXPECT_EQ(std::vector<float>(t.data().begin(), t.data().end()),
              std::vector<float>(other->data().begin(), other->data().end()))
        << name;
  }
}

}  // namespace

TEST(Checkpoint, SerializeRoundTripIsBitExact) {
  const Model m(small(UpsamplerKind::continuous, 2.0), 3);
  const Checkpoint ck = capture(m, 1);
  const Checkpoint back = deserialize(serialize(ck));
  EXPECT_EQ(back.version, kCheckpointVersion);
  EXPECT_EQ(back.config_hash, config_hash(m.config()));
  EXPECT_EQ(back.stage, 1);
  ASSERT_EQ(back.tensors.size(), ck.tensors.size());
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    EXPECT_EQ(back.tensors[i].name, ck.tensors[i].name);
    EXPECT_EQ(back.tensors[i].shape, ck.tensors[i].shape);
    EXPECT_EQ(back.tensors[i].values, ck.tensors[i].values);
  }
  EXPECT_EQ(serialize(back), serialize(ck));
}

TEST(Checkpoint, HeaderLayout) {
  Checkpoint ck;
  ck.config_hash = 0x0102030405060708ull;
  ck.stage = 2;
  ck.tensors.push_back({"a", {2}, {1.0f, -2.0f}});
  const auto bytes = serialize(ck);
  // magic 4, version 4, hash 8, stage 1, count 4, name len 2 + 1, rank 1, extent 4, values 8
  ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 1 + 4 + 3 + 1 + 4 + 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "C2DK");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 0x08);
  EXPECT_EQ(bytes[15], 0x01);
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes.back(), 0xC0);  // -2.0f little-endian: 00 00 00 C0
}

TEST(Checkpoint, FileRoundTripRestoresModel) {
  const auto dir = std::filesystem::temp_directory_path() / "c2d_test_ckpt";
  std::filesystem::create_directories(dir);
  const Model a(small(UpsamplerKind::discrete, 3.0), 1);
  save_checkpoint(capture(a, 2), dir / "m.ckpt");
  Model b(small(UpsamplerKind::discrete, 3.0), 2);
  restore(b, load_checkpoint(dir / "m.ckpt"));
  expect_same_params(a, b);
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), IoError);
}

TEST(Checkpoint, TruncationAndCorruptionAreRejected) {
  const auto bytes = serialize(capture(Model(small(UpsamplerKind::continuous, 2.0), 1), 1));
  for (std::size_t cut : {std::size_t(0), std::size_t(3), std::size_t(20), bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(deserialize(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + std::ptrdiff_t(cut))),
                 FormatError)
        << cut;
  }
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(deserialize(extra), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize(magic), FormatError);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(deserialize(version), FormatError);
}

TEST(Checkpoint, RestoreChecksHashAndShapes) {
  const Model a(small(UpsamplerKind::continuous, 2.0), 1);
  Model b(small(UpsamplerKind::continuous, 3.0), 1);
  EXPECT_THROW(restore(b, capture(a, 1)), ConfigError);
  Checkpoint ck = capture(a, 1);
  Model c(small(UpsamplerKind::continuous, 2.0), 1);
  ck.tensors.erase(ck.tensors.begin());
  EXPECT_THROW(restore(c, ck), FormatError);
}

TEST(Checkpoint, OptimizerMomentsRoundTrip) {
  Model m(small(UpsamplerKind::discrete, 2.0), 1);
  std::mt19937_64 rng(4);
  std::vector<Tensor> params = m.trainable();
  AdamState st;
  for (int step = 0; step < 2; ++step) {
    for (auto& p : params) p.zero_grad();
    sum(m.forward(c2d::test::random_tensor({4, 4, 3}, rng, 0.f, 1.f, false), 2.0)).backward();
    adam_step(params, st, 1e-3);
  }
  const Checkpoint ck = deserialize(serialize(capture(m, 2, &st)));
  EXPECT_TRUE(ck.has_optimizer());
  const auto back = restore_optimizer(m, ck);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->step, 2u);
  EXPECT_EQ(back->m, st.m);
  EXPECT_EQ(back->v, st.v);
  EXPECT_FALSE(restore_optimizer(m, capture(m, 2)).has_value());
}

TEST(Transfer, CopiesBackboneAndReinitializesUpsampler) {
  const ModelConfig c1 = small(UpsamplerKind::continuous, 2.0);
  const Model stage1(c1, 5);
  const Checkpoint ck = capture(stage1, 1);
  for (int s : {2, 3, 4}) {
    const Model stage2 = transfer_weights(ck, small(UpsamplerKind::discrete, s), 6);
    expect_same_params(stage1, stage2, "shallow.");
    expect_same_params(stage1, stage2, "deep.");
    EXPECT_EQ(stage2.params().find("up.hiif.mlp1.weight"), nullptr);
    EXPECT_EQ(stage2.params().at("up.shuffle.weight").shape()[0], std::size_t(3 * s * s));
    const Model fresh(small(UpsamplerKind::discrete, s), 6);
    expect_same_params(fresh, stage2, "up.");
  }
}

TEST(Transfer, RejectsMismatchedBackbone) {
  const Checkpoint ck = capture(Model(small(UpsamplerKind::continuous, 2.0), 1), 1);
  ModelConfig other = small(UpsamplerKind::discrete, 2.0);
  other.channels = 6;
  EXPECT_THROW(transfer_weights(ck, other, 1), ShapeError);
}
