#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "c2d/ops.hpp"
#include "c2d/tensor.hpp"

namespace c2d::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f,
                            bool requires_grad = true) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<float> random_values(std::size_t n, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) of
// d<f(), R>/d param, R a fixed random projection. The projection is summed in
// double on the numeric side so float rounding of the loss stays small.
inline double gradient_error(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                             std::uint64_t seed = 7, double h = 1e-3) {
  std::mt19937_64 rng(seed);
  Tensor probe_out;
  {
    NoGradGuard guard;
    probe_out = f();
  }
  const std::vector<float> proj = random_values(probe_out.numel(), rng);
  auto objective = [&]() {
    NoGradGuard guard;
    const Tensor out = f();
    double acc = 0.0;
    const auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) acc += static_cast<double>(d[i]) * proj[i];
    return acc;
  };

  for (auto p : params) p.zero_grad();
  Tensor out = f();
  sum(mul(out, Tensor::from(out.shape(), proj))).backward();

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (auto p : params) {
    const std::vector<float> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float keep = values[i];
      values[i] = keep + static_cast<float>(h);
      const double up = objective();
      values[i] = keep - static_cast<float>(h);
      const double down = objective();
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
  }
  const double denom = std::max(std::sqrt(std::max(a2, n2)), 1e-12);
  return std::sqrt(diff2) / denom;
}

inline double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

}  // namespace c2d::test
