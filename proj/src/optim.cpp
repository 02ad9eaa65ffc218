#include "c2d/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "c2d/errors.hpp"

namespace c2d {

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].numel(), 0.0f);
      state.v[i].assign(params[i].numel(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("Adam state tracks a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel() || state.v[i].size() != params[i].numel()) {
      throw ShapeError("Adam moment buffer " + std::to_string(i) + " does not match parameter shape " +
                       shape_str(params[i].shape()));
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (!p.has_grad()) continue;
    auto value = p.mutable_data();
    const auto grad = p.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      value[j] = static_cast<float>(value[j] - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

double lr_at_epoch(const LrSchedule& sched, int epoch) {
  if (sched.total_epochs < 1 || sched.warmup_epochs < 0 || sched.warmup_epochs >= sched.total_epochs) {
    throw RangeError("invalid schedule: warmup " + std::to_string(sched.warmup_epochs) + ", total " +
                     std::to_string(sched.total_epochs));
  }
  if (epoch < 0 || epoch >= sched.total_epochs) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(sched.total_epochs) + ")");
  }
  const int last = sched.total_epochs - 1;
  if (epoch == last) return sched.lr_min;
  if (epoch < sched.warmup_epochs) {
    return sched.lr_min +
           (sched.lr_max - sched.lr_min) * static_cast<double>(epoch) / static_cast<double>(sched.warmup_epochs);
  }
  const double t = static_cast<double>(epoch - sched.warmup_epochs) / static_cast<double>(last - sched.warmup_epochs);
  return sched.lr_min + 0.5 * (sched.lr_max - sched.lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace c2d
