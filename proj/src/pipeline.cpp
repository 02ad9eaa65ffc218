#include "c2d/pipeline.hpp"

#include <cstdlib>
#include <fstream>

namespace c2d {

std::uint64_t derive_seed(std::uint64_t run_seed, const std::string& tag) {
  return fnv1a64(tag + ":" + std::to_string(run_seed));
}

std::filesystem::path data_root(const RunConfig& rc) {
  if (!rc.data.root.empty()) return rc.data.root;
  if (const char* env = std::getenv("C2D_DATA_ROOT"); env != nullptr && *env != '\0') return env;
  return std::filesystem::path(rc.run.out_dir) / "data";
}

void ensure_dataset(const RunConfig& rc) {
  const auto root = data_root(rc);
  if (std::filesystem::is_directory(root / "train" / "hr")) return;
  write_synthetic_set(root / "train", rc.data.train_images, rc.data.train_size, rc.data.seed);
  write_synthetic_set(root / "val", rc.data.val_images, rc.data.val_size, rc.data.seed + 1);
}

std::vector<std::pair<std::string, ImageBuffer>> load_named(const std::filesystem::path& root) {
  std::vector<std::pair<std::string, ImageBuffer>> out;
  for (const auto& p : list_dataset(root)) out.emplace_back(p.stem().string(), load_png(p));
  return out;
}

TrainData load_train_data(const RunConfig& rc) {
  const auto root = data_root(rc);
  TrainData d;
  d.train = load_dataset(root / "train");
  d.val = load_named(root / "val");
  return d;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

StageOutput finish(const std::filesystem::path& dir, const std::string& stem, TrainResult result) {
  StageOutput out;
  out.checkpoint = dir / (stem + ".ckpt");
  out.log = dir / (stem + "_log.csv");
  save_checkpoint(result.checkpoint, out.checkpoint);
  write_text(out.log, log_csv(result.log));
  out.result = std::move(result);
  return out;
}

}  // namespace

Model load_model(const ModelConfig& cfg, const Checkpoint& ckpt) {
  Model m(cfg, 0);
  restore(m, ckpt);
  return m;
}

StageOutput run_stage1(const RunConfig& rc, const TrainData& data, const EpochCallback& on_epoch) {
  rc.validate();
  const std::filesystem::path dir = rc.run.out_dir;
  Model model(rc.stage1_model(), derive_seed(rc.run.seed, "init1"));
  TrainPlan plan = rc.stage1;
  plan.lr_size = rc.model.patch;
  TrainHooks hooks;
  hooks.failure_checkpoint = dir / "stage1_failure.ckpt";
  if (on_epoch) hooks.on_epoch = [&](const EpochLog& e) { on_epoch(1, e); };
  return finish(dir, "stage1", train_stage1(model, plan, data, derive_seed(rc.run.seed, "train1"), hooks));
}

StageOutput run_stage2(const RunConfig& rc, const TrainData& data, const std::optional<Checkpoint>& stage1,
                       const EpochCallback& on_epoch) {
  rc.validate();
  const std::filesystem::path dir = rc.run.out_dir;
  TrainPlan plan = rc.stage2;
  plan.lr_size = rc.model.patch;
  std::optional<Model> model;
  if (rc.run.skip_stage1) {
    model.emplace(rc.stage2_model(), derive_seed(rc.run.seed, "init1"));
    plan.epochs = rc.stage1.epochs + rc.stage2.epochs;
    plan.lr_max = rc.stage1.lr_max;
    plan.lr_min = rc.stage1.lr_min;
    plan.warmup = rc.stage1.warmup;
  } else {
    if (!stage1) throw ConfigError("stage 2 needs a stage-1 checkpoint unless run.skip_stage1 is set");
    if (stage1->stage != 1) throw ConfigError("transfer source is not a stage-1 checkpoint");
    if (stage1->config_hash != config_hash(rc.stage1_model())) {
      throw ConfigError("stage-1 checkpoint was trained with a different model config");
    }
    model.emplace(transfer_weights(*stage1, rc.stage2_model(), derive_seed(rc.run.seed, "init2")));
  }
  TrainHooks hooks;
  hooks.failure_checkpoint = dir / "stage2_failure.ckpt";
  if (on_epoch) hooks.on_epoch = [&](const EpochLog& e) { on_epoch(2, e); };
  return finish(dir, "stage2", train_stage2(*model, plan, data, derive_seed(rc.run.seed, "train2"), hooks));
}

EvalOutput run_eval(const RunConfig& rc, const Checkpoint& stage2, const TrainData& data) {
  if (stage2.stage != 2) throw ConfigError("evaluation needs a stage-2 checkpoint");
  if (rc.eval.scale != rc.stage2.scale) {
    throw ConfigError("eval.scale x" + std::to_string(rc.eval.scale) + " differs from the trained scale x" +
                      std::to_string(rc.stage2.scale));
  }
  const Model model = load_model(rc.stage2_model(), stage2);
  BenchmarkOptions opt;
  opt.on_y = rc.eval.on_y;
  opt.border = rc.eval.border;
  EvalOutput out;
  out.model = run_benchmark(data.val, rc.eval.scale, model_upscaler(model), opt);
  out.model.model = "stage2";
  out.bicubic = run_benchmark(data.val, rc.eval.scale, bicubic_upscaler(), opt);
  out.bicubic.model = "bicubic";
  const std::filesystem::path dir = rc.run.out_dir;
  out.model_csv = dir / "metrics.csv";
  out.bicubic_csv = dir / "bicubic.csv";
  out.model.write_csv(out.model_csv);
  out.bicubic.write_csv(out.bicubic_csv);
  return out;
}

PipelineOutput run_pipeline(const RunConfig& rc, const EpochCallback& on_epoch) {
  rc.validate();
  ensure_dataset(rc);
  const TrainData data = load_train_data(rc);
  PipelineOutput out;
  std::optional<Checkpoint> ck1;
  if (!rc.run.skip_stage1) {
    out.stage1 = run_stage1(rc, data, on_epoch);
    ck1 = out.stage1->result.checkpoint;
  }
  out.stage2 = run_stage2(rc, data, ck1, on_epoch);
  out.eval = run_eval(rc, out.stage2.result.checkpoint, data);
  return out;
}

}  // namespace c2d
