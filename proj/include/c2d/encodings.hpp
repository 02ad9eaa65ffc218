#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "c2d/tensor.hpp"

namespace c2d {

struct WindowSize {
  int w = 8;
  int h = 8;
  friend bool operator==(const WindowSize&, const WindowSize&) = default;
};

// Window extents on a concrete feature map. 1 <= w <= W, 1 <= h <= H.
struct WindowGeometry {
  int w = 1;
  int h = 1;
  int W = 1;
  int H = 1;
};

// Clamps a requested window to the feature map extents.
WindowGeometry make_geometry(WindowSize window, int H, int W);
void validate(const WindowGeometry& g);

using Bits = std::array<int, 2>;

// (floor(2u / w) mod 2, floor(2v / h) mod 2) for column u and row v.
Bits window_hier_encoding(const WindowGeometry& g, int u, int v);

// [H x W x 2] float plane of window_hier_encoding over every position.
Tensor encoding_plane(const WindowGeometry& g);

// Local coordinate of a high-resolution query inside its low-resolution cell.
struct QueryCoord {
  double x_local = 0.0;
  double y_local = 0.0;
};

// floor(x * 2^(level+1)) mod 2 per axis. Levels 0 and 1 are the ones used.
Bits coord_hier_encoding(const QueryCoord& q, int level);

struct CellVector {
  double rows = 0.0;  // 2 / (s H)
  double cols = 0.0;  // 2 / (s W)
};

CellVector cell_vector(double scale, int H, int W);

// floor(s * n) with a tolerance for scales like 2.0000000001.
int scaled_extent(double scale, int n);

// Maps every pixel centre of the floor(sH) x floor(sW) output grid onto the
// H x W feature grid (centre alignment).
struct LocalGrid {
  int hr_h = 0;
  int hr_w = 0;
  Tensor coords;                             // [hr_h x hr_w x 2], (x_local, y_local)
  std::vector<std::int64_t> feature_index;   // row-major index into the H x W map
};

LocalGrid local_coord_grid(double scale, int H, int W);

// Same mapping for a single output pixel (row i, column j) of an
// out_h x out_w grid over an H x W feature map.
struct QueryLocation {
  QueryCoord coord;
  std::int64_t feature_index = 0;
};
QueryLocation locate_query(int i, int j, int out_h, int out_w, int H, int W);

}  // namespace c2d
