#pragma once

#include <cstdint>
#include <vector>

#include "c2d/tensor.hpp"

namespace c2d {

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over every parameter that carries a grad. Moment
// buffers are created on the first call; shapes must stay fixed afterwards.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

struct LrSchedule {
  double lr_max = 4e-4;
  double lr_min = 1e-6;
  int warmup_epochs = 50;
  int total_epochs = 700;
};

// Linear warm-up from lr_min to lr_max over warmup_epochs, then cosine decay
// reaching lr_min at total_epochs - 1.
double lr_at_epoch(const LrSchedule& sched, int epoch);

}  // namespace c2d
