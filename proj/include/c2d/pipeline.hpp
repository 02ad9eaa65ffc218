#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "c2d/config.hpp"

namespace c2d {

// Derived stream seed for a named consumer of the run seed.
std::uint64_t derive_seed(std::uint64_t run_seed, const std::string& tag);

// data.root, else $C2D_DATA_ROOT, else <out_dir>/data.
std::filesystem::path data_root(const RunConfig& rc);
// Writes the synthetic train/ and val/ sets unless <root>/train/hr exists.
void ensure_dataset(const RunConfig& rc);
TrainData load_train_data(const RunConfig& rc);
std::vector<std::pair<std::string, ImageBuffer>> load_named(const std::filesystem::path& root);

struct StageOutput {
  TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
};

// Stage 1 from a fresh continuous model; writes stage1.ckpt and stage1_log.csv.
using EpochCallback = std::function<void(int stage, const EpochLog&)>;

StageOutput run_stage1(const RunConfig& rc, const TrainData& data, const EpochCallback& on_epoch = {});
// Stage 2 from a stage-1 checkpoint (transfer) or, when run.skip_stage1 is
// set, from scratch for stage1.epochs + stage2.epochs epochs with the stage-1
// learning-rate bounds. Writes stage2.ckpt and stage2_log.csv.
StageOutput run_stage2(const RunConfig& rc, const TrainData& data, const std::optional<Checkpoint>& stage1,
                       const EpochCallback& on_epoch = {});

struct EvalOutput {
  MetricReport model;
  MetricReport bicubic;
  std::filesystem::path model_csv;
  std::filesystem::path bicubic_csv;
};

// Scores a stage-2 checkpoint and the bicubic baseline on the validation set
// at eval.scale; writes metrics.csv and bicubic.csv.
EvalOutput run_eval(const RunConfig& rc, const Checkpoint& stage2, const TrainData& data);

struct PipelineOutput {
  std::optional<StageOutput> stage1;
  StageOutput stage2;
  EvalOutput eval;
};

// Dataset, stage 1 (unless skipped), stage 2 and evaluation under run.out_dir.
PipelineOutput run_pipeline(const RunConfig& rc, const EpochCallback& on_epoch = {});

// Loads a checkpoint into a model built from cfg (hash checked).
Model load_model(const ModelConfig& cfg, const Checkpoint& ckpt);

}  // namespace c2d
