#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "c2d/tensor.hpp"

namespace c2d {

// ---- linear algebra -------------------------------------------------------

// [M x K] . [K x N] -> [M x N]
Tensor matmul(const Tensor& a, const Tensor& b);
// Batched: [B x M x K] . [B x K x N] -> [B x M x N]
Tensor bmm(const Tensor& a, const Tensor& b);
// Swaps the last two axes of a rank-2 or rank-3 tensor.
Tensor transpose(const Tensor& x);
// y = x W^T + b over the last axis. weight is [out x in]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float factor);
Tensor gelu(const Tensor& x);
// elu(x) + 1, the positive feature map used by kernelized linear attention.
Tensor elu_plus_one(const Tensor& x);

// ---- shape / data movement -----------------------------------------------

Tensor concat_last(const std::vector<Tensor>& parts);
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t length);

// Row gather over the last axis: x is viewed as [rows x C]; out row r copies
// x row index[r], or zeros when index[r] < 0. out_leading gives the leading
// extents of the result (their product must equal index.size()).
Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> index, Shape out_leading);
// Elementwise gather: out[i] = x[index[i]] (0 when index[i] < 0).
Tensor gather(const Tensor& x, std::span<const std::int64_t> index, Shape out_shape);

Tensor chw_to_hwc(const Tensor& x);
Tensor hwc_to_chw(const Tensor& x);

// Depth-to-space, [C*r^2 x H x W] -> [C x rH x rW] (PyTorch channel order).
Tensor pixel_shuffle(const Tensor& x, std::size_t r);
// Inverse rearrangement, [C x rH x rW] -> [C*r^2 x H x W].
Tensor pixel_unshuffle(const Tensor& x, std::size_t r);
// Channels-last variant: [H x W x C*r^2] -> [rH x rW x C].
Tensor pixel_shuffle_hwc(const Tensor& x, std::size_t r);

// Replicates the last row/column of an [H x W x C] map.
Tensor pad_edge_hwc(const Tensor& x, std::size_t pad_bottom, std::size_t pad_right);
// Keeps the top-left [h x w] region of an [H x W x C] map.
Tensor crop_hwc(const Tensor& x, std::size_t h, std::size_t w);

// ---- convolution -----------------------------------------------------------

// Cross-correlation on [C_in x H x W]; w is [C_out x C_in x k x k].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t padding);
// Same-size cross-correlation on channels-last [H x W x C_in] (padding k/2).
Tensor conv2d_hwc(const Tensor& x, const Tensor& w, const Tensor& b);
// Per-channel same-size convolution on [H x W x C]; w is [C x 1 x k x k].
Tensor depthwise_conv2d_hwc(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- normalization ---------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// [M x N] -> [1 x N]
Tensor sum_rows(const Tensor& x);
// x [M x N] divided row-wise by d [M x 1].
Tensor div_rows(const Tensor& x, const Tensor& d);
// Mean absolute error as a scalar.
Tensor mean_abs_diff(const Tensor& pred, const Tensor& target);

// ---- multiply-accumulate accounting -----------------------------------------

// While a MacCounter is alive, forward kernels on this thread add their
// multiply-accumulate counts (dense k x k taps, padding included) to it.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;
  std::uint64_t count() const { return count_; }

 private:
  friend void count_macs(std::uint64_t);
  std::uint64_t count_ = 0;
  MacCounter* previous_;
};

void count_macs(std::uint64_t macs);

}  // namespace c2d
