#include <gtest/gtest.h>

#include <cmath>

#include "c2d/encodings.hpp"
#include "c2d/errors.hpp"

using namespace c2d;

TEST(WindowEncoding, OriginIsZero) {
  for (int w : {1, 3, 8, 16}) EXPECT_EQ(window_hier_encoding(make_geometry({w, w}, 16, 16), 0, 0), (Bits{0, 0}));
}

TEST(WindowEncoding, WorkedExamples) {
  const auto g = make_geometry({8, 8}, 16, 16);
  EXPECT_EQ(window_hier_encoding(g, 5, 3), (Bits{1, 0}));
  EXPECT_EQ(window_hier_encoding(g, 11, 13), (Bits{0, 1}));
}

TEST(WindowEncoding, RejectsOutOfRangeIndex) {
  const auto g = make_geometry({4, 4}, 8, 8);
  EXPECT_THROW(window_hier_encoding(g, 8, 0), RangeError);
  EXPECT_THROW(window_hier_encoding(g, 0, -1), RangeError);
}

// floor(2u/w) mod 2 equals [2 (u mod w) >= w], since 2u/w = 2 floor(u/w) + 2 (u mod w)/w.
TEST(WindowEncoding, ExhaustiveOverSixtyFourGrid) {
  int mismatches = 0;
  for (int w = 1; w <= 64; ++w)
    for (int h : {1, 2, 3, 5, 8, 16, 64}) {
      const auto g = make_geometry({w, h}, 64, 64);
      for (int v = 0; v < 64; ++v)
        for (int u = 0; u < 64; ++u) {
          const Bits expect{2 * (u % w) >= w ? 1 : 0, 2 * (v % h) >= h ? 1 : 0};
          mismatches += window_hier_encoding(g, u, v) != expect;
        }
    }
  EXPECT_EQ(mismatches, 0);
}

TEST(WindowEncoding, PeriodicInWindowSize) {
  const auto g = make_geometry({6, 4}, 20, 30);
  for (int v = 0; v + 4 < 20; ++v)
    for (int u = 0; u + 6 < 30; ++u) {
      EXPECT_EQ(window_hier_encoding(g, u, v)[0], window_hier_encoding(g, u + 6, v)[0]);
      EXPECT_EQ(window_hier_encoding(g, u, v)[1], window_hier_encoding(g, u, v + 4)[1]);
    }
}

TEST(WindowEncoding, EvenWindowSplitsIntoEqualHalves) {
  const auto g = make_geometry({8, 8}, 8, 8);
  int ones = 0;
  for (int u = 0; u < 8; ++u) ones += window_hier_encoding(g, u, 0)[0];
  EXPECT_EQ(ones, 4);
}

TEST(EncodingPlane, FullWindowFlipsOncePerAxis) {
  const auto g = make_geometry({6, 4}, 4, 6);
  const Tensor p = encoding_plane(g);
  ASSERT_EQ(p.shape(), (Shape{4, 6, 2}));
  for (std::size_t v = 0; v < 4; ++v)
    for (std::size_t u = 0; u < 6; ++u) {
      EXPECT_EQ(p.at({v, u, 0}), u >= 3 ? 1.0f : 0.0f);
      EXPECT_EQ(p.at({v, u, 1}), v >= 2 ? 1.0f : 0.0f);
    }
}

TEST(EncodingPlane, SinglePixel) {
  const Tensor p = encoding_plane(make_geometry({4, 4}, 1, 1));
  ASSERT_EQ(p.shape(), (Shape{1, 1, 2}));
  EXPECT_EQ(p.data()[0], 0.0f);
  EXPECT_EQ(p.data()[1], 0.0f);
}

TEST(EncodingPlane, ValuesAreBinary) {
  const Tensor p = encoding_plane(make_geometry({5, 7}, 13, 11));
  for (float v : p.data()) EXPECT_TRUE(v == 0.0f || v == 1.0f);
}

TEST(CoordEncoding, WorkedExamples) {
  EXPECT_EQ(coord_hier_encoding({0.0, 0.0}, 0), (Bits{0, 0}));
  EXPECT_EQ(coord_hier_encoding({0.0, 0.0}, 1), (Bits{0, 0}));
  EXPECT_EQ(coord_hier_encoding({0.3, 0.7}, 0), (Bits{0, 1}));
  EXPECT_EQ(coord_hier_encoding({0.3, 0.7}, 1), (Bits{1, 0}));
}

// On the lattice x = i/32, floor(x 2^(j+1)) mod 2 is bit (4 - j) of i.
TEST(CoordEncoding, ExhaustiveOverQueryLattice) {
  int mismatches = 0;
  for (int j = 0; j <= 1; ++j)
    for (int iy = 0; iy < 32; ++iy)
      for (int ix = 0; ix < 32; ++ix) {
        const Bits expect{(ix >> (4 - j)) & 1, (iy >> (4 - j)) & 1};
        mismatches += coord_hier_encoding({ix / 32.0, iy / 32.0}, j) != expect;
      }
  EXPECT_EQ(mismatches, 0);
}

TEST(CoordEncoding, FrequencyDoublesPerLevel) {
  for (int j = 0; j <= 2; ++j) {
    int flips = 0;
    Bits prev = coord_hier_encoding({0.0, 0.0}, j);
    for (int i = 1; i < 1024; ++i) {
      const Bits b = coord_hier_encoding({i / 1024.0, 0.0}, j);
      flips += b[0] != prev[0];
      prev = b;
    }
    EXPECT_EQ(flips, (1 << (j + 1)) - 1);
  }
}

TEST(CellVector, DirectSubstitution) {
  const auto c = cell_vector(2.0, 64, 64);
  EXPECT_DOUBLE_EQ(c.rows, 0.015625);
  EXPECT_DOUBLE_EQ(c.cols, 0.015625);
  const auto d = cell_vector(1.0, 2, 4);
  EXPECT_DOUBLE_EQ(d.rows, 1.0);
  EXPECT_DOUBLE_EQ(d.cols, 0.5);
}

TEST(CellVector, DecreasesWithScale) {
  const auto a = cell_vector(1.0, 16, 8), b = cell_vector(2.0, 16, 8), c = cell_vector(4.0, 16, 8);
  EXPECT_GT(a.rows, b.rows);
  EXPECT_GT(b.rows, c.rows);
  EXPECT_GT(a.cols, b.cols);
  EXPECT_GT(b.cols, c.cols);
  EXPECT_GT(c.rows, 0.0);
  EXPECT_THROW(cell_vector(2.0, 0, 4), RangeError);
}

TEST(LocalGrid, UnitScaleIsCellCentre) {
  const LocalGrid g = local_coord_grid(1.0, 5, 7);
  ASSERT_EQ(g.coords.shape(), (Shape{5, 7, 2}));
  for (float v : g.coords.data()) EXPECT_EQ(v, 0.5f);
  for (std::size_t i = 0; i < g.feature_index.size(); ++i) EXPECT_EQ(g.feature_index[i], std::int64_t(i));
}

TEST(LocalGrid, DoubleScaleOnSinglePixel) {
  const LocalGrid g = local_coord_grid(2.0, 1, 1);
  ASSERT_EQ(g.coords.shape(), (Shape{2, 2, 2}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(g.coords.at({i, j, 0}), j == 0 ? 0.25f : 0.75f);
      EXPECT_EQ(g.coords.at({i, j, 1}), i == 0 ? 0.25f : 0.75f);
    }
}

TEST(LocalGrid, CoordinatesInUnitInterval) {
  for (double s : {1.0, 1.3, 2.0, 2.7, 3.0, 4.0}) {
    const LocalGrid g = local_coord_grid(s, 9, 6);
    EXPECT_EQ(g.hr_h, int(std::floor(s * 9 + 1e-9)));
    EXPECT_EQ(g.hr_w, int(std::floor(s * 6 + 1e-9)));
    for (float v : g.coords.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
    for (auto idx : g.feature_index) {
      EXPECT_GE(idx, 0);
      EXPECT_LT(idx, 54);
    }
  }
}
