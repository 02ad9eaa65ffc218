#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "c2d/errors.hpp"
#include "c2d/ops.hpp"
#include "c2d/optim.hpp"
#include "test_util.hpp"

using namespace c2d;
using c2d::test::gradient_error;
using c2d::test::random_tensor;

namespace {

std::vector<float> naive_matmul(const std::vector<float>& a, const std::vector<float>& b, std::size_t m,
                                std::size_t k, std::size_t n) {
  std::vector<float> c(m * n, 0.0f);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += double(a[i * k + t]) * b[t * n + j];
      c[i * n + j] = static_cast<float>(acc);
    }
  return c;
}

// Direct cross-correlation on [C x H x W] with zero padding.
std::vector<float> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, int pad) {
  const int ci = int(x.dim(0)), H = int(x.dim(1)), W = int(x.dim(2));
  const int co = int(w.dim(0)), k = int(w.dim(2));
  const int oh = H + 2 * pad - k + 1, ow = W + 2 * pad - k + 1;
  std::vector<float> out(std::size_t(co) * oh * ow);
  for (int o = 0; o < co; ++o)
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        double acc = b.defined() ? b.data()[o] : 0.0;
        for (int i = 0; i < ci; ++i)
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int y = r + dy - pad, xx = c + dx - pad;
              if (y < 0 || y >= H || xx < 0 || xx >= W) continue;
              acc += double(x.at({std::size_t(i), std::size_t(y), std::size_t(xx)})) *
                     w.at({std::size_t(o), std::size_t(i), std::size_t(dy), std::size_t(dx)});
            }
        out[(std::size_t(o) * oh + r) * ow + c] = float(acc);
      }
  return out;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  std::mt19937_64 rng(1);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(c2d::test::max_abs_diff(matmul(eye, a).data(), a.data()), 0.0);
}

TEST(Matmul, ZerosAnnihilate) {
  std::mt19937_64 rng(2);
  Tensor out = matmul(Tensor::zeros({2, 3}), random_tensor({3, 2}, rng));
  for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Matmul, SmallProduct) {
  Tensor out = matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), Tensor::from({2, 1}, {5, 6}));
  ASSERT_EQ(out.shape(), (Shape{2, 1}));
  EXPECT_EQ(out.data()[0], 17.0f);
  EXPECT_EQ(out.data()[1], 39.0f);
}

TEST(Matmul, MatchesTripleLoopOnRandomShapes) {
  std::mt19937_64 rng(3);
  for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {5, 7, 3}, {17, 16, 33}, {64, 9, 2}}) {
    Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    const auto ref = naive_matmul({a.data().begin(), a.data().end()}, {b.data().begin(), b.data().end()}, m, k, n);
    EXPECT_LT(c2d::test::max_abs_diff(matmul(a, b).data(), ref), 1e-5);
  }
}

TEST(Matmul, RejectsInnerMismatch) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Matmul, BatchedMatchesPerSlice) {
  std::mt19937_64 rng(4);
  Tensor a = random_tensor({3, 4, 5}, rng), b = random_tensor({3, 5, 2}, rng);
  Tensor c = bmm(a, b);
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<float> as(a.data().begin() + s * 20, a.data().begin() + (s + 1) * 20);
    std::vector<float> bs(b.data().begin() + s * 10, b.data().begin() + (s + 1) * 10);
    const auto ref = naive_matmul(as, bs, 4, 5, 2);
    EXPECT_LT(c2d::test::max_abs_diff(std::span<const float>(c.data().data() + s * 8, 8), ref), 1e-5);
  }
}

TEST(Conv2d, OneByOneUnitKernelIsIdentity) {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor({1, 5, 6}, rng);
  Tensor out = conv2d(x, Tensor::from({1, 1, 1, 1}, {1.0f}), Tensor::zeros({1}), 0);
  EXPECT_EQ(c2d::test::max_abs_diff(out.data(), x.data()), 0.0);
}

TEST(Conv2d, ZeroInputGivesBiasPlanes) {
  std::mt19937_64 rng(6);
  const std::vector<float> bias{0.5f, -1.f, 2.f};
  Tensor out = conv2d(Tensor::zeros({2, 4, 4}), random_tensor({3, 2, 3, 3}, rng), Tensor::from({3}, bias), 1);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out.data()[o * 16 + i], bias[o]);
}

TEST(Conv2d, OnesKernelOnRampMatchesDirectSum) {
  std::vector<float> ramp(16);
  std::iota(ramp.begin(), ramp.end(), 0.0f);
  Tensor x = Tensor::from({1, 4, 4}, ramp);
  Tensor w = Tensor::full({1, 1, 3, 3}, 1.0f);
  Tensor out = conv2d(x, w, Tensor::zeros({1}), 1);
  // Neighbourhood sums of r*4+c with zero padding, written out by hand.
  const std::vector<float> expected = {10, 18, 24, 18, 27, 45, 54, 39, 51, 81, 90, 63, 42, 66, 72, 50};
  EXPECT_EQ(c2d::test::max_abs_diff(out.data(), expected), 0.0);
  EXPECT_EQ(c2d::test::max_abs_diff(out.data(), naive_conv(x, w, Tensor::zeros({1}), 1)), 0.0);
}

TEST(Conv2d, RandomMatchesDirectSummation) {
  std::mt19937_64 rng(7);
  for (std::size_t k : {1u, 3u}) {
    Tensor x = random_tensor({3, 7, 5}, rng), w = random_tensor({4, 3, k, k}, rng), b = random_tensor({4}, rng);
    EXPECT_LT(c2d::test::max_abs_diff(conv2d(x, w, b, k / 2).data(), naive_conv(x, w, b, int(k / 2))), 1e-5);
  }
}

TEST(Conv2d, ChannelsLastAgreesWithChannelsFirst) {
  std::mt19937_64 rng(8);
  Tensor x = random_tensor({6, 5, 3}, rng), w = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4}, rng);
  Tensor ref = chw_to_hwc(conv2d(hwc_to_chw(x), w, b, 1));
  EXPECT_LT(c2d::test::max_abs_diff(conv2d_hwc(x, w, b).data(), ref.data()), 1e-5);
}

TEST(Conv2d, DepthwiseMatchesPerChannelConv) {
  std::mt19937_64 rng(9);
  Tensor x = random_tensor({5, 4, 3}, rng), w = random_tensor({3, 1, 3, 3}, rng), b = random_tensor({3}, rng);
  Tensor out = depthwise_conv2d_hwc(x, w, b);
  Tensor chw = hwc_to_chw(x);
  for (std::size_t c = 0; c < 3; ++c) {
    Tensor xc = Tensor::from({1, 5, 4}, std::vector<float>(chw.data().begin() + c * 20, chw.data().begin() + (c + 1) * 20));
    Tensor wc = Tensor::from({1, 1, 3, 3}, std::vector<float>(w.data().begin() + c * 9, w.data().begin() + (c + 1) * 9));
    const auto ref = naive_conv(xc, wc, Tensor::from({1}, {b.data()[c]}), 1);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(out.data()[i * 3 + c], ref[i], 1e-5);
  }
}

TEST(Conv2d, RejectsChannelMismatch) {
  EXPECT_THROW(conv2d(Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1}), 1), ShapeError);
}

TEST(LayerNorm, ConstantVectorNormalizesToZero) {
  Tensor out = layer_norm(Tensor::full({1, 5}, 3.7f), Tensor::full({5}, 1.f), Tensor::zeros({5}), 1e-5f);
  for (float v : out.data()) EXPECT_LT(std::abs(v), 1e-3f);
}

TEST(LayerNorm, ThreeValueExample) {
  Tensor out = layer_norm(Tensor::from({3}, {1, 2, 3}), Tensor::full({3}, 1.f), Tensor::zeros({3}), 1e-5f);
  // mean 2, biased variance 2/3
  const double sd = std::sqrt(2.0 / 3.0 + 1e-5);
  EXPECT_NEAR(out.data()[0], -1.0 / sd, 1e-5);
  EXPECT_NEAR(out.data()[1], 0.0, 1e-6);
  EXPECT_NEAR(out.data()[2], 1.0 / sd, 1e-5);
  EXPECT_NEAR(out.data()[2], 1.2247, 1e-4);
}

TEST(LayerNorm, ZeroGammaGivesBeta) {
  std::mt19937_64 rng(10);
  Tensor beta = Tensor::from({4}, {0.1f, -0.2f, 0.3f, 4.f});
  Tensor out = layer_norm(random_tensor({3, 4}, rng), Tensor::zeros({4}), beta);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(out.data()[i], beta.data()[i % 4]);
}

TEST(PixelShuffle, UnitFactorIsIdentity) {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({3, 4, 5}, rng);
  EXPECT_EQ(c2d::test::max_abs_diff(pixel_shuffle(x, 1).data(), x.data()), 0.0);
}

TEST(PixelShuffle, ShapeLaw) {
  EXPECT_EQ(pixel_shuffle(Tensor::zeros({12, 4, 4}), 2).shape(), (Shape{3, 8, 8}));
  EXPECT_EQ(pixel_shuffle_hwc(Tensor::zeros({4, 4, 48}), 4).shape(), (Shape{16, 16, 3}));
}

TEST(PixelShuffle, FourChannelsToTwoByTwo) {
  Tensor out = pixel_shuffle(Tensor::from({4, 1, 1}, {1, 2, 3, 4}), 2);
  ASSERT_EQ(out.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(std::vector<float>(out.data().begin(), out.data().end()), (std::vector<float>{1, 2, 3, 4}));
}

TEST(PixelShuffle, IndexMappingOverAllElements) {
  const std::size_t C = 2, r = 3, H = 2, W = 3;
  std::vector<float> v(C * r * r * H * W);
  std::iota(v.begin(), v.end(), 0.0f);
  Tensor out = pixel_shuffle(Tensor::from({C * r * r, H, W}, v), r);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < r * H; ++y)
      for (std::size_t x = 0; x < r * W; ++x) {
        const std::size_t in_c = c * r * r + (y % r) * r + (x % r);
        EXPECT_EQ(out.at({c, y, x}), v[(in_c * H + y / r) * W + x / r]);
      }
}

TEST(PixelShuffle, InverseRoundTripIsBijective) {
  std::mt19937_64 rng(12);
  Tensor x = random_tensor({18, 3, 4}, rng);
  Tensor y = pixel_shuffle(x, 3);
  EXPECT_EQ(c2d::test::max_abs_diff(pixel_unshuffle(y, 3).data(), x.data()), 0.0);
  std::vector<float> a(x.data().begin(), x.data().end()), b(y.data().begin(), y.data().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(PixelShuffle, ChannelsLastAgreesWithChannelsFirst) {
  std::mt19937_64 rng(13);
  Tensor x = random_tensor({3, 2, 12}, rng);
  Tensor ref = chw_to_hwc(pixel_shuffle(hwc_to_chw(x), 2));
  EXPECT_EQ(c2d::test::max_abs_diff(pixel_shuffle_hwc(x, 2).data(), ref.data()), 0.0);
}

TEST(PixelShuffle, RejectsIndivisibleChannels) { EXPECT_THROW(pixel_shuffle(Tensor::zeros({5, 2, 2}), 2), ShapeError); }

TEST(Backward, SumOfSquaresGivesTwoX) {
  Tensor x = Tensor::from({4}, {1, -2, 3.5f, 0}, true);
  sum(mul(x, x)).backward();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(x.grad()[i], 2 * x.data()[i]);
}

TEST(Backward, RejectsNonScalarLoss) { EXPECT_THROW(Tensor::zeros({2}, true).backward(), ShapeError); }

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor y;
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    y = sum(mul(x, x));
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, GradientsAccumulateAcrossCalls) {
  Tensor x = Tensor::from({1}, {3}, true);
  sum(x).backward();
  sum(x).backward();
  EXPECT_FLOAT_EQ(x.grad()[0], 2.0f);
}

// ---- finite-difference checks, tolerance 1e-3 per op -------------------------

class OpGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{42};
};

TEST_F(OpGradient, MatmulChain) {
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng), c = random_tensor({5, 2}, rng);
  EXPECT_LT(gradient_error([&] { return matmul(matmul(a, b), c); }, {a, b, c}), 1e-3);
}

TEST_F(OpGradient, Bmm) {
  Tensor a = random_tensor({2, 3, 4}, rng), b = random_tensor({2, 4, 3}, rng);
  EXPECT_LT(gradient_error([&] { return bmm(a, b); }, {a, b}), 1e-3);
}

TEST_F(OpGradient, Transpose) {
  Tensor a = random_tensor({2, 3, 4}, rng);
  EXPECT_LT(gradient_error([&] { return transpose(a); }, {a}), 1e-3);
}

TEST_F(OpGradient, Linear) {
  Tensor x = random_tensor({2, 3, 4}, rng), w = random_tensor({5, 4}, rng), b = random_tensor({5}, rng);
  EXPECT_LT(gradient_error([&] { return linear(x, w, b); }, {x, w, b}), 1e-3);
}

TEST_F(OpGradient, Elementwise) {
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  EXPECT_LT(gradient_error([&] { return add(a, b); }, {a, b}), 1e-3);
  EXPECT_LT(gradient_error([&] { return sub(a, b); }, {a, b}), 1e-3);
  EXPECT_LT(gradient_error([&] { return mul(a, b); }, {a, b}), 1e-3);
  EXPECT_LT(gradient_error([&] { return scale(a, -2.5f); }, {a}), 1e-3);
}

TEST_F(OpGradient, Activations) {
  Tensor a = random_tensor({4, 5}, rng, -2.f, 2.f);
  EXPECT_LT(gradient_error([&] { return gelu(a); }, {a}), 1e-3);
  EXPECT_LT(gradient_error([&] { return elu_plus_one(a); }, {a}), 1e-3);
}

TEST_F(OpGradient, ConcatAndSlice) {
  Tensor a = random_tensor({3, 2}, rng), b = random_tensor({3, 4}, rng);
  EXPECT_LT(gradient_error([&] { return concat_last({a, b}); }, {a, b}), 1e-3);
  EXPECT_LT(gradient_error([&] { return slice_last(b, 1, 2); }, {b}), 1e-3);
}

TEST_F(OpGradient, Gathers) {
  Tensor x = random_tensor({4, 3}, rng);
  const std::vector<std::int64_t> rows{3, 0, -1, 3, 2};
  EXPECT_LT(gradient_error([&] { return gather_rows(x, rows, {5}); }, {x}), 1e-3);
  const std::vector<std::int64_t> idx{11, 0, 5, 5, -1, 7};
  EXPECT_LT(gradient_error([&] { return gather(x, idx, {2, 3}); }, {x}), 1e-3);
}

TEST_F(OpGradient, LayoutOps) {
  Tensor x = random_tensor({8, 2, 3}, rng);
  EXPECT_LT(gradient_error([&] { return pixel_shuffle(x, 2); }, {x}), 1e-3);
  EXPECT_LT(gradient_error([&] { return chw_to_hwc(x); }, {x}), 1e-3);
  Tensor h = random_tensor({2, 3, 8}, rng);
  EXPECT_LT(gradient_error([&] { return pixel_shuffle_hwc(h, 2); }, {h}), 1e-3);
  EXPECT_LT(gradient_error([&] { return pad_edge_hwc(h, 2, 1); }, {h}), 1e-3);
  EXPECT_LT(gradient_error([&] { return crop_hwc(h, 1, 2); }, {h}), 1e-3);
  EXPECT_LT(gradient_error([&] { return h.reshape({6, 8}); }, {h}), 1e-3);
}

TEST_F(OpGradient, Convolutions) {
  Tensor x = random_tensor({2, 4, 5}, rng), w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
  EXPECT_LT(gradient_error([&] { return conv2d(x, w, b, 1); }, {x, w, b}), 1e-3);
  Tensor xh = random_tensor({4, 5, 2}, rng);
  EXPECT_LT(gradient_error([&] { return conv2d_hwc(xh, w, b); }, {xh, w, b}), 1e-3);
  Tensor dw = random_tensor({2, 1, 3, 3}, rng), db = random_tensor({2}, rng);
  EXPECT_LT(gradient_error([&] { return depthwise_conv2d_hwc(xh, dw, db); }, {xh, dw, db}), 1e-3);
}

TEST_F(OpGradient, LayerNorm) {
  Tensor x = random_tensor({3, 6}, rng), g = random_tensor({6}, rng), b = random_tensor({6}, rng);
  EXPECT_LT(gradient_error([&] { return layer_norm(x, g, b); }, {x, g, b}), 1e-3);
}

TEST_F(OpGradient, Reductions) {
  Tensor x = random_tensor({3, 4}, rng), d = random_tensor({3, 1}, rng, 0.5f, 2.f), t = random_tensor({3, 4}, rng);
  EXPECT_LT(gradient_error([&] { return sum(x); }, {x}), 1e-3);
  EXPECT_LT(gradient_error([&] { return mean(x); }, {x}), 1e-3);
  EXPECT_LT(gradient_error([&] { return sum_rows(x); }, {x}), 1e-3);
  EXPECT_LT(gradient_error([&] { return div_rows(x, d); }, {x, d}), 1e-3);
  EXPECT_LT(gradient_error([&] { return mean_abs_diff(x, t); }, {x}), 1e-3);
}

// ---- optimizer and schedule -------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<Tensor> params{Tensor::from({3}, {1, 2, 3}, true)};
  params[0].mutable_grad();
  AdamState st;
  adam_step(params, st, 1e-3);
  EXPECT_EQ(std::vector<float>(params[0].data().begin(), params[0].data().end()), (std::vector<float>{1, 2, 3}));
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  std::vector<Tensor> params{Tensor::from({3}, {0.5f, 0.5f, 0.5f}, true)};
  auto g = params[0].mutable_grad();
  g[0] = 0.3f;
  g[1] = -2.0f;
  g[2] = 1e-2f;
  AdamState st;
  adam_step(params, st, 1e-2);
  EXPECT_NEAR(params[0].data()[0], 0.5 - 1e-2, 1e-6);
  EXPECT_NEAR(params[0].data()[1], 0.5 + 1e-2, 1e-6);
  EXPECT_NEAR(params[0].data()[2], 0.5 - 1e-2, 1e-5);
}

TEST(Adam, TwoStepsMatchHandRecurrence) {
  std::vector<Tensor> params{Tensor::from({1}, {1.0f}, true)};
  AdamState st;
  double p = 1.0, m = 0.0, v = 0.0;
  const double lr = 0.1;
  for (int t = 1; t <= 2; ++t) {
    params[0].zero_grad();
    params[0].mutable_grad()[0] = 1.0f;
    adam_step(params, st, lr);
    m = 0.9 * m + 0.1;
    v = 0.999 * v + 0.001;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    p -= lr * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(params[0].data()[0], p, 1e-6);
  }
  EXPECT_EQ(st.step, 2u);
}

TEST(Adam, RejectsChangedShapes) {
  std::vector<Tensor> params{Tensor::from({2}, {1, 1}, true)};
  params[0].mutable_grad()[0] = 1.0f;
  AdamState st;
  adam_step(params, st, 1e-3);
  std::vector<Tensor> other{Tensor::from({3}, {1, 1, 1}, true)};
  other[0].mutable_grad()[0] = 1.0f;
  EXPECT_THROW(adam_step(other, st, 1e-3), ShapeError);
}

TEST(LrSchedule, StageOneEndpoints) {
  const LrSchedule s{4e-4, 1e-6, 50, 700};
  EXPECT_DOUBLE_EQ(lr_at_epoch(s, 0), 1e-6);
  EXPECT_DOUBLE_EQ(lr_at_epoch(s, 50), 4e-4);
  EXPECT_DOUBLE_EQ(lr_at_epoch(s, 699), 1e-6);
}

TEST(LrSchedule, CosineMidpoint) {
  const LrSchedule s{4e-4, 1e-6, 10, 211};
  EXPECT_NEAR(lr_at_epoch(s, 110), (4e-4 + 1e-6) / 2, 1e-9);
}

TEST(LrSchedule, BoundsAndMonotonicity) {
  for (const LrSchedule s : {LrSchedule{4e-4, 1e-6, 50, 700}, LrSchedule{1e-5, 1e-6, 0, 300}, LrSchedule{2e-3, 1e-6, 3, 30}}) {
    double prev = lr_at_epoch(s, 0);
    for (int e = 0; e < s.total_epochs; ++e) {
      const double lr = lr_at_epoch(s, e);
      EXPECT_GE(lr, s.lr_min);
      EXPECT_LE(lr, s.lr_max);
      if (e > 0 && e <= s.warmup_epochs) {
        EXPECT_GE(lr, prev);
      }
      if (e > s.warmup_epochs) {
        EXPECT_LE(lr, prev);
      }
      prev = lr;
    }
  }
}

TEST(LrSchedule, RejectsOutOfRangeEpoch) {
  const LrSchedule s{4e-4, 1e-6, 5, 10};
  EXPECT_THROW(lr_at_epoch(s, 10), RangeError);
  EXPECT_THROW(lr_at_epoch(s, -1), RangeError);
  EXPECT_THROW(lr_at_epoch(LrSchedule{1, 0, 10, 10}, 0), RangeError);
}

TEST(Determinism, RepeatedOpsAreBitwiseEqual) {
  std::mt19937_64 rng(77);
  Tensor x = random_tensor({6, 6, 4}, rng), w = random_tensor({4, 4, 3, 3}, rng), b = random_tensor({4}, rng);
  Tensor a = gelu(conv2d_hwc(x, w, b)), c = gelu(conv2d_hwc(x, w, b));
  EXPECT_EQ(std::vector<float>(a.data().begin(), a.data().end()), std::vector<float>(c.data().begin(), c.data().end()));
}
