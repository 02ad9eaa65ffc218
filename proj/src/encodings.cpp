#include "c2d/encodings.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "c2d/errors.hpp"

namespace c2d {

WindowGeometry make_geometry(WindowSize window, int H, int W) {
  if (H < 1 || W < 1) throw RangeError("feature map extents must be positive");
  if (window.w < 1 || window.h < 1) throw RangeError("window extents must be positive");
  return WindowGeometry{std::min(window.w, W), std::min(window.h, H), W, H};
}

void validate(const WindowGeometry& g) {
  if (g.w < 1 || g.h < 1 || g.w > g.W || g.h > g.H) {
    throw RangeError("invalid window geometry " + std::to_string(g.w) + "x" + std::to_string(g.h) + " on " +
                     std::to_string(g.W) + "x" + std::to_string(g.H));
  }
}

Bits window_hier_encoding(const WindowGeometry& g, int u, int v) {
  validate(g);
  if (u < 0 || u >= g.W || v < 0 || v >= g.H) {
    throw RangeError("feature index (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
  }
  // Integer division is the exact rational floor for non-negative operands.
  return {(2 * u / g.w) % 2, (2 * v / g.h) % 2};
}

Tensor encoding_plane(const WindowGeometry& g) {
  validate(g);
  std::vector<float> plane(static_cast<std::size_t>(g.H) * g.W * 2);
  for (int v = 0; v < g.H; ++v)
    for (int u = 0; u < g.W; ++u) {
      const auto bits = window_hier_encoding(g, u, v);
      const std::size_t at = (static_cast<std::size_t>(v) * g.W + u) * 2;
      plane[at] = static_cast<float>(bits[0]);
      plane[at + 1] = static_cast<float>(bits[1]);
    }
  return Tensor::from({static_cast<std::size_t>(g.H), static_cast<std::size_t>(g.W), 2}, std::move(plane));
}

Bits coord_hier_encoding(const QueryCoord& q, int level) {
  if (level < 0) throw RangeError("hierarchy level must be non-negative");
  const double f = std::ldexp(1.0, level + 1);
  auto bit = [f](double x) { return static_cast<int>(static_cast<long long>(std::floor(x * f)) % 2); };
  return {bit(q.x_local), bit(q.y_local)};
}

CellVector cell_vector(double scale, int H, int W) {
  if (H < 1 || W < 1) throw RangeError("cell_vector needs positive extents");
  if (!(scale > 0.0)) throw RangeError("cell_vector needs a positive scale");
  return {2.0 / (scale * H), 2.0 / (scale * W)};
}

int scaled_extent(double scale, int n) { return static_cast<int>(std::floor(scale * n + 1e-9)); }

QueryLocation locate_query(int i, int j, int out_h, int out_w, int H, int W) {
  const double cy = (i + 0.5) / out_h * H;
  const double cx = (j + 0.5) / out_w * W;
  const int row = std::clamp(static_cast<int>(std::floor(cy)), 0, H - 1);
  const int col = std::clamp(static_cast<int>(std::floor(cx)), 0, W - 1);
  QueryLocation loc;
  loc.coord.y_local = std::clamp(cy - row, 0.0, std::nextafter(1.0, 0.0));
  loc.coord.x_local = std::clamp(cx - col, 0.0, std::nextafter(1.0, 0.0));
  loc.feature_index = static_cast<std::int64_t>(row) * W + col;
  return loc;
}

LocalGrid local_coord_grid(double scale, int H, int W) {
  if (scale < 1.0) throw RangeError("local_coord_grid needs scale >= 1");
  if (H < 1 || W < 1) throw RangeError("local_coord_grid needs positive extents");
  LocalGrid grid;
  grid.hr_h = scaled_extent(scale, H);
  grid.hr_w = scaled_extent(scale, W);
  std::vector<float> coords(static_cast<std::size_t>(grid.hr_h) * grid.hr_w * 2);
  grid.feature_index.resize(static_cast<std::size_t>(grid.hr_h) * grid.hr_w);
  for (int i = 0; i < grid.hr_h; ++i)
    for (int j = 0; j < grid.hr_w; ++j) {
      const auto loc = locate_query(i, j, grid.hr_h, grid.hr_w, H, W);
      const std::size_t at = static_cast<std::size_t>(i) * grid.hr_w + j;
      constexpr float below_one = 0.99999994f;
      coords[at * 2] = std::min(static_cast<float>(loc.coord.x_local), below_one);
      coords[at * 2 + 1] = std::min(static_cast<float>(loc.coord.y_local), below_one);
      grid.feature_index[at] = loc.feature_index;
    }
  grid.coords = Tensor::from({static_cast<std::size_t>(grid.hr_h), static_cast<std::size_t>(grid.hr_w), 2},
                             std::move(coords));
  return grid;
}

}  // namespace c2d
