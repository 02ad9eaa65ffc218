#include "c2d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "c2d/errors.hpp"

namespace c2d {

using detail::Node;
using detail::make_result;

namespace {

thread_local MacCounter* g_mac_counter = nullptr;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

// C[M x N] = A[M x K] . B[K x N], all contiguous row-major. Each output row is
// accumulated in ascending k order.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  std::vector<float> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    float* __restrict out = acc.data();
    const float* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      const float* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
    }
    float* crow = c + i * n;
    if (accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] += acc[j];
    } else {
      std::copy(acc.begin(), acc.end(), crow);
    }
  }
}

std::vector<float> transposed(const float* x, std::size_t rows, std::size_t cols) {
  std::vector<float> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = x[r * cols + c];
  return t;
}

// Accumulates A^T . B into c, with A [M x K] and B [M x N] -> c [K x N].
void gemm_tn_acc(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) {
  const auto at = transposed(a, m, k);
  gemm_nn(k, m, n, at.data(), b, c, true);
}

// Accumulates A . B^T into c, with A [M x N] and B [K x N] -> c [M x K].
void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c) {
  const auto bt = transposed(b, k, n);
  gemm_nn(m, n, k, a, bt.data(), c, true);
}

void accumulate(std::vector<float>& dst, const std::vector<float>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename F>
Tensor unary(const Tensor& x, F&& fwd_and_deriv) {
  const auto in = x.data();
  std::vector<float> out(in.size());
  std::vector<float> deriv(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto [y, d] = fwd_and_deriv(in[i]);
    out[i] = y;
    deriv[i] = d;
  }
  return make_result(x.shape(), std::move(out), {x}, [deriv = std::move(deriv)](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv[i];
  });
}

std::size_t leading_rows(const Shape& s) {
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------

MacCounter::MacCounter() : previous_(g_mac_counter) { g_mac_counter = this; }
MacCounter::~MacCounter() { g_mac_counter = previous_; }

void count_macs(std::uint64_t macs) {
  if (g_mac_counter != nullptr) g_mac_counter->count_ += macs;
}

// ---- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul expects rank-2 operands");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul inner dimension mismatch: " + shape_str(a.shape()) + " . " + shape_str(b.shape()));
  std::vector<float> out(m * n);
  gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data(), false);
  count_macs(static_cast<std::uint64_t>(m) * k * n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (an.requires_grad) gemm_nt_acc(m, n, k, self.grad.data(), bn.value.data(), an.ensure_grad().data());
    if (bn.requires_grad) gemm_tn_acc(m, k, n, an.value.data(), self.grad.data(), bn.ensure_grad().data());
  });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require(a.rank() == 3 && b.rank() == 3, "bmm expects rank-3 operands");
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  require(b.dim(0) == batch && b.dim(1) == k,
          "bmm shape mismatch: " + shape_str(a.shape()) + " . " + shape_str(b.shape()));
  std::vector<float> out(batch * m * n);
  for (std::size_t i = 0; i < batch; ++i) {
    gemm_nn(m, k, n, a.data().data() + i * m * k, b.data().data() + i * k * n, out.data() + i * m * n, false);
  }
  count_macs(static_cast<std::uint64_t>(batch) * m * k * n);
  return make_result({batch, m, n}, std::move(out), {a, b}, [batch, m, k, n](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    for (std::size_t i = 0; i < batch; ++i) {
      const float* g = self.grad.data() + i * m * n;
      if (an.requires_grad)
        gemm_nt_acc(m, n, k, g, bn.value.data() + i * k * n, an.ensure_grad().data() + i * m * k);
      if (bn.requires_grad)
        gemm_tn_acc(m, k, n, an.value.data() + i * m * k, g, bn.ensure_grad().data() + i * k * n);
    }
  });
}

Tensor transpose(const Tensor& x) {
  require(x.rank() == 2 || x.rank() == 3, "transpose expects rank 2 or 3");
  const std::size_t batch = x.rank() == 3 ? x.dim(0) : 1;
  const std::size_t rows = x.dim(x.rank() - 2), cols = x.dim(x.rank() - 1);
  std::vector<float> out(x.numel());
  for (std::size_t i = 0; i < batch; ++i) {
    auto t = transposed(x.data().data() + i * rows * cols, rows, cols);
    std::copy(t.begin(), t.end(), out.begin() + static_cast<std::ptrdiff_t>(i * rows * cols));
  }
  Shape shape = x.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  return make_result(std::move(shape), std::move(out), {x}, [batch, rows, cols](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < batch; ++i) {
      const float* src = self.grad.data() + i * rows * cols;  // [cols x rows]
      for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r) g[i * rows * cols + r * cols + c] += src[c * rows + r];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(weight.rank() == 2, "linear weight must be [out x in]");
  require(x.rank() >= 1 && x.shape().back() == weight.dim(1),
          "linear input " + shape_str(x.shape()) + " does not match weight " + shape_str(weight.shape()));
  const std::size_t rows = leading_rows(x.shape());
  const std::size_t in = weight.dim(1), out_f = weight.dim(0);
  const bool has_bias = bias.defined();
  if (has_bias) require(bias.numel() == out_f, "linear bias size mismatch");
  const auto wt = transposed(weight.data().data(), out_f, in);
  std::vector<float> out(rows * out_f);
  gemm_nn(rows, in, out_f, x.data().data(), wt.data(), out.data(), false);
  if (has_bias) {
    const auto b = bias.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < out_f; ++j) out[r * out_f + j] += b[j];
  }
  count_macs(static_cast<std::uint64_t>(rows) * in * out_f);
  Shape shape = x.shape();
  shape.back() = out_f;
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result(std::move(shape), std::move(out), std::move(inputs), [rows, in, out_f, has_bias](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    if (xn.requires_grad) gemm_nn(rows, out_f, in, self.grad.data(), wn.value.data(), xn.ensure_grad().data(), true);
    if (wn.requires_grad) gemm_tn_acc(rows, out_f, in, self.grad.data(), xn.value.data(), wn.ensure_grad().data());
    if (has_bias && self.inputs[2]->requires_grad) {
      auto& gb = self.inputs[2]->ensure_grad();
      std::vector<double> acc(out_f, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < out_f; ++j) acc[j] += self.grad[r * out_f + j];
      for (std::size_t j = 0; j < out_f; ++j) gb[j] += static_cast<float>(acc[j]);
    }
  });
}

// ---- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) accumulate(in->ensure_grad(), self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "sub shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (self.inputs[0]->requires_grad) accumulate(self.inputs[0]->ensure_grad(), self.grad);
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an.value[i];
    }
  });
}

Tensor scale(const Tensor& x, float factor) {
  return unary(x, [factor](float v) { return std::pair{v * factor, factor}; });
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(x, [&](float v) {
    const double xv = v;
    const double cdf = 0.5 * (1.0 + std::erf(xv * inv_sqrt2));
    const double pdf = inv_sqrt2pi * std::exp(-0.5 * xv * xv);
    return std::pair{static_cast<float>(xv * cdf), static_cast<float>(cdf + xv * pdf)};
  });
}

Tensor elu_plus_one(const Tensor& x) {
  return unary(x, [](float v) {
    if (v > 0.0f) return std::pair{v + 1.0f, 1.0f};
    const float e = std::exp(v);
    return std::pair{e, e};
  });
}

// ---- shape / data movement -----------------------------------------------------

Tensor concat_last(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_last needs at least one tensor");
  const Shape& first = parts[0].shape();
  require(!first.empty(), "concat_last needs rank >= 1");
  const std::size_t rows = leading_rows(first);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rank() == first.size(), "concat_last rank mismatch");
    for (std::size_t i = 0; i + 1 < first.size(); ++i) require(p.dim(i) == first[i], "concat_last leading extent mismatch");
    widths.push_back(p.shape().back());
    total += p.shape().back();
  }
  std::vector<float> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].data();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * w), w, out.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    offset += w;
  }
  Shape shape = first;
  shape.back() = total;
  return make_result(std::move(shape), std::move(out), parts, [rows, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      Node& in = *self.inputs[k];
      const std::size_t w = widths[k];
      if (in.requires_grad) {
        auto& g = in.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < w; ++j) g[r * w + j] += self.grad[r * total + off + j];
      }
      off += w;
    }
  });
}

Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t length) {
  require(x.rank() >= 1, "slice_last needs rank >= 1");
  const std::size_t width = x.shape().back();
  require(begin + length <= width, "slice_last range out of bounds");
  const std::size_t rows = leading_rows(x.shape());
  std::vector<float> out(rows * length);
  const auto src = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * width + begin), length,
                out.begin() + static_cast<std::ptrdiff_t>(r * length));
  Shape shape = x.shape();
  shape.back() = length;
  return make_result(std::move(shape), std::move(out), {x}, [rows, width, begin, length](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < length; ++j) g[r * width + begin + j] += self.grad[r * length + j];
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> index, Shape out_leading) {
  require(x.rank() >= 1, "gather_rows needs rank >= 1");
  require(shape_numel(out_leading) == index.size(), "gather_rows index count does not match output shape");
  const std::size_t width = x.shape().back();
  const auto rows_in = static_cast<std::int64_t>(leading_rows(x.shape()));
  std::vector<float> out(index.size() * width, 0.0f);
  const auto src = x.data();
  for (std::size_t r = 0; r < index.size(); ++r) {
    const std::int64_t s = index[r];
    if (s < 0) continue;
    if (s >= rows_in) throw RangeError("gather_rows index out of range");
    std::copy_n(src.begin() + s * static_cast<std::ptrdiff_t>(width), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  Shape shape = std::move(out_leading);
  shape.push_back(width);
  std::vector<std::int64_t> idx(index.begin(), index.end());
  return make_result(std::move(shape), std::move(out), {x}, [idx = std::move(idx), width](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 0) continue;
      float* dst = g.data() + idx[r] * static_cast<std::ptrdiff_t>(width);
      const float* gs = self.grad.data() + r * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += gs[j];
    }
  });
}

Tensor gather(const Tensor& x, std::span<const std::int64_t> index, Shape out_shape) {
  require(shape_numel(out_shape) == index.size(), "gather index count does not match output shape");
  const auto n_in = static_cast<std::int64_t>(x.numel());
  std::vector<float> out(index.size(), 0.0f);
  const auto src = x.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0) continue;
    if (index[i] >= n_in) throw RangeError("gather index out of range");
    out[i] = src[static_cast<std::size_t>(index[i])];
  }
  std::vector<std::int64_t> idx(index.begin(), index.end());
  return make_result(std::move(out_shape), std::move(out), {x}, [idx = std::move(idx)](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (idx[i] >= 0) g[static_cast<std::size_t>(idx[i])] += self.grad[i];
  });
}

Tensor chw_to_hwc(const Tensor& x) {
  require(x.rank() == 3, "chw_to_hwc expects rank 3");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<std::int64_t> idx(x.numel());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t xx = 0; xx < w; ++xx)
      for (std::size_t k = 0; k < c; ++k) idx[(y * w + xx) * c + k] = static_cast<std::int64_t>((k * h + y) * w + xx);
  return gather(x, idx, {h, w, c});
}

Tensor hwc_to_chw(const Tensor& x) {
  require(x.rank() == 3, "hwc_to_chw expects rank 3");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  std::vector<std::int64_t> idx(x.numel());
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) idx[(k * h + y) * w + xx] = static_cast<std::int64_t>((y * w + xx) * c + k);
  return gather(x, idx, {c, h, w});
}

Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
  require(x.rank() == 3, "pixel_shuffle expects [C x H x W]");
  require(r >= 1 && x.dim(0) % (r * r) == 0,
          "pixel_shuffle: channel count " + std::to_string(x.dim(0)) + " not divisible by r^2");
  const std::size_t c = x.dim(0) / (r * r), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = h * r, ow = w * r;
  std::vector<std::int64_t> idx(x.numel());
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t src_c = k * r * r + (y % r) * r + (xx % r);
        idx[(k * oh + y) * ow + xx] = static_cast<std::int64_t>((src_c * h + y / r) * w + xx / r);
      }
  return gather(x, idx, {c, oh, ow});
}

Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
  require(x.rank() == 3, "pixel_unshuffle expects [C x rH x rW]");
  require(r >= 1 && x.dim(1) % r == 0 && x.dim(2) % r == 0, "pixel_unshuffle: extents not divisible by r");
  const std::size_t c = x.dim(0), oh = x.dim(1), ow = x.dim(2);
  const std::size_t h = oh / r, w = ow / r;
  std::vector<std::int64_t> idx(x.numel());
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t dst_c = k * r * r + (y % r) * r + (xx % r);
        idx[(dst_c * h + y / r) * w + xx / r] = static_cast<std::int64_t>((k * oh + y) * ow + xx);
      }
  return gather(x, idx, {c * r * r, h, w});
}

Tensor pixel_shuffle_hwc(const Tensor& x, std::size_t r) {
  require(x.rank() == 3, "pixel_shuffle_hwc expects [H x W x C]");
  require(r >= 1 && x.dim(2) % (r * r) == 0,
          "pixel_shuffle_hwc: channel count " + std::to_string(x.dim(2)) + " not divisible by r^2");
  const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2), c = cin / (r * r);
  const std::size_t oh = h * r, ow = w * r;
  std::vector<std::int64_t> idx(x.numel());
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t xx = 0; xx < ow; ++xx)
      for (std::size_t k = 0; k < c; ++k) {
        const std::size_t src_c = k * r * r + (y % r) * r + (xx % r);
        idx[(y * ow + xx) * c + k] = static_cast<std::int64_t>(((y / r) * w + xx / r) * cin + src_c);
      }
  return gather(x, idx, {oh, ow, c});
}

Tensor pad_edge_hwc(const Tensor& x, std::size_t pad_bottom, std::size_t pad_right) {
  require(x.rank() == 3, "pad_edge_hwc expects [H x W x C]");
  const std::size_t h = x.dim(0), w = x.dim(1);
  const std::size_t ph = h + pad_bottom, pw = w + pad_right;
  std::vector<std::int64_t> idx(ph * pw);
  for (std::size_t y = 0; y < ph; ++y)
    for (std::size_t xx = 0; xx < pw; ++xx)
      idx[y * pw + xx] = static_cast<std::int64_t>(std::min(y, h - 1) * w + std::min(xx, w - 1));
  return gather_rows(x, idx, {ph, pw});
}

Tensor crop_hwc(const Tensor& x, std::size_t h, std::size_t w) {
  require(x.rank() == 3 && h <= x.dim(0) && w <= x.dim(1), "crop_hwc region exceeds input");
  const std::size_t in_w = x.dim(1);
  std::vector<std::int64_t> idx(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t xx = 0; xx < w; ++xx) idx[y * w + xx] = static_cast<std::int64_t>(y * in_w + xx);
  return gather_rows(x, idx, {h, w});
}

// ---- convolution ---------------------------------------------------------------

Tensor conv2d_hwc(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 3, "conv2d_hwc expects [H x W x C_in]");
  require(w.rank() == 4 && w.dim(2) == w.dim(3) && w.dim(2) % 2 == 1, "conv2d weight must be [C_out x C_in x k x k], k odd");
  const std::size_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2), pad = k / 2;
  require(w.dim(1) == cin, "conv2d channel mismatch: input has " + std::to_string(cin) + ", weight expects " +
                               std::to_string(w.dim(1)));
  const bool has_bias = b.defined();
  if (has_bias) require(b.numel() == cout, "conv2d bias size mismatch");
  const std::size_t taps = cin * k * k;
  const std::size_t pixels = h * wd;

  // im2col with column order (ci, ky, kx) matching the weight layout.
  std::vector<float> cols(pixels * taps, 0.0f);
  const auto src = x.data();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t xx = 0; xx < wd; ++xx) {
      float* row = cols.data() + (y * wd + xx) * taps;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const auto sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(pad);
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
          const float* px = src.data() + (static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx)) * cin;
          for (std::size_t ci = 0; ci < cin; ++ci) row[(ci * k + ky) * k + kx] = px[ci];
        }
      }
    }
  const auto wt = transposed(w.data().data(), cout, taps);
  std::vector<float> out(pixels * cout);
  gemm_nn(pixels, taps, cout, cols.data(), wt.data(), out.data(), false);
  if (has_bias) {
    const auto bv = b.data();
    for (std::size_t p = 0; p < pixels; ++p)
      for (std::size_t co = 0; co < cout; ++co) out[p * cout + co] += bv[co];
  }
  count_macs(static_cast<std::uint64_t>(pixels) * taps * cout);

  std::vector<Tensor> inputs{x, w};
  if (has_bias) inputs.push_back(b);
  return make_result({h, wd, cout}, std::move(out), std::move(inputs),
                     [cols = std::move(cols), h, wd, cin, cout, k, pad, taps, pixels, has_bias](Node& self) {
                       Node& xn = *self.inputs[0];
                       Node& wn = *self.inputs[1];
                       if (wn.requires_grad)
                         gemm_tn_acc(pixels, cout, taps, self.grad.data(), cols.data(), wn.ensure_grad().data());
                       if (has_bias && self.inputs[2]->requires_grad) {
                         auto& gb = self.inputs[2]->ensure_grad();
                         std::vector<double> acc(cout, 0.0);
                         for (std::size_t p = 0; p < pixels; ++p)
                           for (std::size_t co = 0; co < cout; ++co) acc[co] += self.grad[p * cout + co];
                         for (std::size_t co = 0; co < cout; ++co) gb[co] += static_cast<float>(acc[co]);
                       }
                       if (xn.requires_grad) {
                         std::vector<float> dcols(pixels * taps);
                         gemm_nn(pixels, cout, taps, self.grad.data(), wn.value.data(), dcols.data(), false);
                         auto& gx = xn.ensure_grad();
                         for (std::size_t y = 0; y < h; ++y)
                           for (std::size_t xx = 0; xx < wd; ++xx) {
                             const float* row = dcols.data() + (y * wd + xx) * taps;
                             for (std::size_t ky = 0; ky < k; ++ky) {
                               const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
                               if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                               for (std::size_t kx = 0; kx < k; ++kx) {
                                 const auto sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(pad);
                                 if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
                                 float* px = gx.data() + (static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx)) * cin;
                                 for (std::size_t ci = 0; ci < cin; ++ci) px[ci] += row[(ci * k + ky) * k + kx];
                               }
                             }
                           }
                       }
                     });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t padding) {
  require(x.rank() == 3, "conv2d expects [C_in x H x W]");
  require(w.rank() == 4, "conv2d weight must be [C_out x C_in x k x k]");
  const std::size_t k = w.dim(2);
  require(k == 1 || k == 3, "conv2d supports k in {1,3}");
  require(padding == k / 2, "conv2d padding must be k/2 (same-size output)");
  if (w.dim(1) != x.dim(0)) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(x.dim(0)) + ", weight expects " +
                     std::to_string(w.dim(1)));
  }
  return hwc_to_chw(conv2d_hwc(chw_to_hwc(x), w, b));
}

Tensor depthwise_conv2d_hwc(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 3, "depthwise_conv2d_hwc expects [H x W x C]");
  const std::size_t h = x.dim(0), wd = x.dim(1), c = x.dim(2);
  require(w.rank() == 4 && w.dim(0) == c && w.dim(1) == 1 && w.dim(2) == w.dim(3) && w.dim(2) % 2 == 1,
          "depthwise weight must be [C x 1 x k x k] with odd k");
  require(b.defined() && b.numel() == c, "depthwise bias size mismatch");
  const std::size_t k = w.dim(2), pad = k / 2;
  const auto src = x.data();
  const auto wv = w.data();
  const auto bv = b.data();
  // Weights re-laid as [tap][c] so the channel loop is contiguous.
  std::vector<float> wt(k * k * c);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t t = 0; t < k * k; ++t) wt[t * c + ch] = wv[ch * k * k + t];
  std::vector<float> out(h * wd * c);
  std::vector<double> acc(c);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t xx = 0; xx < wd; ++xx) {
      for (std::size_t ch = 0; ch < c; ++ch) acc[ch] = bv[ch];
      for (std::size_t ky = 0; ky < k; ++ky) {
        const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const auto sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(pad);
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
          const float* px = src.data() + (static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx)) * c;
          const float* wr = wt.data() + (ky * k + kx) * c;
          for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += static_cast<double>(px[ch]) * wr[ch];
        }
      }
      float* o = out.data() + (y * wd + xx) * c;
      for (std::size_t ch = 0; ch < c; ++ch) o[ch] = static_cast<float>(acc[ch]);
    }
  count_macs(static_cast<std::uint64_t>(h) * wd * c * k * k);
  return make_result({h, wd, c}, std::move(out), {x, w, b}, [h, wd, c, k, pad, wt = std::move(wt)](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    Node& bn = *self.inputs[2];
    std::vector<double> gw(k * k * c, 0.0);
    std::vector<double> gb(c, 0.0);
    std::vector<float>* gx = xn.requires_grad ? &xn.ensure_grad() : nullptr;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < wd; ++xx) {
        const float* g = self.grad.data() + (y * wd + xx) * c;
        for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += g[ch];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(pad);
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(wd)) continue;
            const std::size_t off = (static_cast<std::size_t>(sy) * wd + static_cast<std::size_t>(sx)) * c;
            const float* px = xn.value.data() + off;
            const float* wr = wt.data() + (ky * k + kx) * c;
            double* gwr = gw.data() + (ky * k + kx) * c;
            for (std::size_t ch = 0; ch < c; ++ch) gwr[ch] += static_cast<double>(g[ch]) * px[ch];
            if (gx)
              for (std::size_t ch = 0; ch < c; ++ch) (*gx)[off + ch] += g[ch] * wr[ch];
          }
        }
      }
    if (wn.requires_grad) {
      auto& dst = wn.ensure_grad();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t t = 0; t < k * k; ++t) dst[ch * k * k + t] += static_cast<float>(gw[t * c + ch]);
    }
    if (bn.requires_grad) {
      auto& dst = bn.ensure_grad();
      for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += static_cast<float>(gb[ch]);
    }
  });
}

// ---- normalization ----------------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require(x.rank() >= 1, "layer_norm needs rank >= 1");
  const std::size_t c = x.shape().back();
  require(gamma.numel() == c && beta.numel() == c, "layer_norm affine size mismatch");
  const std::size_t rows = leading_rows(x.shape());
  const auto src = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<float> out(x.numel());
  std::vector<float> xhat(x.numel());
  std::vector<float> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = src.data() + r * c;
    double m = 0.0;
    for (std::size_t j = 0; j < c; ++j) m += row[j];
    m /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - m) * (row[j] - m);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = static_cast<float>(is);
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (row[j] - m) * is;
      xhat[r * c + j] = static_cast<float>(xh);
      out[r * c + j] = static_cast<float>(xh * gv[j] + bv[j]);
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [rows, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       Node& xn = *self.inputs[0];
                       Node& gn = *self.inputs[1];
                       Node& bn = *self.inputs[2];
                       std::vector<double> dg(c, 0.0), db(c, 0.0);
                       std::vector<float>* gx = xn.requires_grad ? &xn.ensure_grad() : nullptr;
                       for (std::size_t r = 0; r < rows; ++r) {
                         const float* g = self.grad.data() + r * c;
                         const float* xh = xhat.data() + r * c;
                         double mean_d = 0.0, mean_dx = 0.0;
                         for (std::size_t j = 0; j < c; ++j) {
                           dg[j] += static_cast<double>(g[j]) * xh[j];
                           db[j] += g[j];
                           const double d = static_cast<double>(g[j]) * gn.value[j];
                           mean_d += d;
                           mean_dx += d * xh[j];
                         }
                         if (!gx) continue;
                         mean_d /= static_cast<double>(c);
                         mean_dx /= static_cast<double>(c);
                         for (std::size_t j = 0; j < c; ++j) {
                           const double d = static_cast<double>(g[j]) * gn.value[j];
                           (*gx)[r * c + j] += static_cast<float>(inv_std[r] * (d - mean_d - xh[j] * mean_dx));
                         }
                       }
                       if (gn.requires_grad) {
                         auto& dst = gn.ensure_grad();
                         for (std::size_t j = 0; j < c; ++j) dst[j] += static_cast<float>(dg[j]);
                       }
                       if (bn.requires_grad) {
                         auto& dst = bn.ensure_grad();
                         for (std::size_t j = 0; j < c; ++j) dst[j] += static_cast<float>(db[j]);
                       }
                     });
}

// ---- reductions ----------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return make_result({}, {static_cast<float>(acc)}, {x}, [](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const float s = self.grad[0];
    for (auto& v : g) v += s;
  });
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, "mean of empty tensor");
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  const double n = static_cast<double>(x.numel());
  return make_result({}, {static_cast<float>(acc / n)}, {x}, [n](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const float s = static_cast<float>(self.grad[0] / n);
    for (auto& v : g) v += s;
  });
}

Tensor sum_rows(const Tensor& x) {
  require(x.rank() == 2, "sum_rows expects [M x N]");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> acc(n, 0.0);
  const auto src = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) acc[j] += src[i * n + j];
  std::vector<float> out(acc.begin(), acc.end());
  return make_result({1, n}, std::move(out), {x}, [m, n](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j];
  });
}

Tensor div_rows(const Tensor& x, const Tensor& d) {
  require(x.rank() == 2 && d.rank() == 2 && d.dim(1) == 1 && d.dim(0) == x.dim(0), "div_rows expects [M x N] / [M x 1]");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<float> out(x.numel());
  const auto xv = x.data();
  const auto dv = d.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] / dv[i];
  return make_result(x.shape(), std::move(out), {x, d}, [m, n](Node& self) {
    Node& xn = *self.inputs[0];
    Node& dn = *self.inputs[1];
    if (xn.requires_grad) {
      auto& g = xn.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j] / dn.value[i];
    }
    if (dn.requires_grad) {
      auto& g = dn.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(self.grad[i * n + j]) * xn.value[i * n + j];
        const double di = dn.value[i];
        g[i] += static_cast<float>(-acc / (di * di));
      }
    }
  });
}

Tensor mean_abs_diff(const Tensor& pred, const Tensor& target) {
  require(pred.shape() == target.shape(),
          "L1 shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  require(pred.numel() > 0, "L1 of empty tensors");
  const auto p = pred.data();
  const auto t = target.data();
  double acc = 0.0;
  std::vector<float> sign(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - t[i];
    acc += std::abs(d);
    sign[i] = d > 0 ? 1.0f : (d < 0 ? -1.0f : 0.0f);
  }
  const double n = static_cast<double>(p.size());
  return make_result({}, {static_cast<float>(acc / n)}, {pred, target}, [sign = std::move(sign), n](Node& self) {
    const float s = static_cast<float>(self.grad[0] / n);
    if (self.inputs[0]->requires_grad) {
      auto& g = self.inputs[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * sign[i];
    }
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= s * sign[i];
    }
  });
}

}  // namespace c2d
