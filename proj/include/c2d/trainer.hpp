#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "c2d/checkpoint.hpp"
#include "c2d/data.hpp"
#include "c2d/metrics.hpp"
#include "c2d/model.hpp"

namespace c2d {

struct TrainPlan {
  int stage = 1;
  double lr_max = 4e-4;
  double lr_min = 1e-6;
  int epochs = 700;
  int warmup = 50;
  int batch = 16;
  int patches_per_image = 1;  // an epoch draws ceil(images * this / batch) batches
  int lr_size = 64;
  int q_count = 1024;         // stage 1 only
  double scale_min = 1.0;     // stage-1 scale draw range
  double scale_max = 4.0;
  int scale = 2;              // stage 2 training scale
  int val_scale = 2;          // scale used for validation PSNR
  int val_every = 1;          // 0 disables validation
  double grad_clip = 0.0;     // global L2 norm; 0 disables
  bool augment = true;
  bool save_optimizer = false;

  static TrainPlan stage1_defaults();
  static TrainPlan stage2_defaults();
  void validate() const;
  LrSchedule schedule() const;
};

struct TrainData {
  std::vector<ImageBuffer> train;
  std::vector<std::pair<std::string, ImageBuffer>> val;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_psnr;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

struct TrainHooks {
  std::filesystem::path failure_checkpoint;  // written before aborting on a non-finite step
  std::function<void(const EpochLog&)> on_epoch;
};

// Mean absolute error; throws ShapeError on mismatched shapes.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// Query set of a stage-1 sample in the model's coordinate convention, plus
// the [q x 3] target colours.
QueryBatch sample_queries(const TrainSample& s);
Tensor query_targets(const TrainSample& s);

Upscaler model_upscaler(const Model& model);
// Mean Y-PSNR of the model on the validation images at an integer scale.
double validation_psnr(const Model& model, const std::vector<std::pair<std::string, ImageBuffer>>& val, int scale);

TrainResult train_stage1(Model& model, const TrainPlan& plan, const TrainData& data, std::uint64_t seed,
                         const TrainHooks& hooks = {});
TrainResult train_stage2(Model& model, const TrainPlan& plan, const TrainData& data, std::uint64_t seed,
                         const TrainHooks& hooks = {});

// epoch,lr,train_loss,val_psnr with an empty field when validation was skipped.
std::string log_csv(const std::vector<EpochLog>& log);

}  // namespace c2d
