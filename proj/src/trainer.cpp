#include "c2d/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "c2d/errors.hpp"
#include "c2d/ops.hpp"

namespace c2d {

TrainPlan TrainPlan::stage1_defaults() { return TrainPlan{}; }

TrainPlan TrainPlan::stage2_defaults() {
  TrainPlan p;
  p.stage = 2;
  p.lr_max = 1e-5;
  p.lr_min = 1e-6;
  p.epochs = 300;
  p.warmup = 0;
  return p;
}

void TrainPlan::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("train stage must be 1 or 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup < 0 || warmup >= epochs) throw ConfigError("warmup must lie in [0, epochs)");
  if (!(lr_max > 0.0) || !(lr_min > 0.0) || lr_min > lr_max) throw ConfigError("need 0 < lr_min <= lr_max");
  if (batch < 1 || patches_per_image < 1 || lr_size < 1 || q_count < 1) {
    throw ConfigError("batch, patches_per_image, patch and q_count must be positive");
  }
  if (scale < 2 || scale > 4) throw ConfigError("stage-2 scale must be 2, 3 or 4");
  if (val_scale < 1 || val_scale > 4) throw ConfigError("validation scale must lie in [1, 4]");
  if (!(scale_min >= 1.0) || !(scale_max >= scale_min) || scale_max > 4.0) {
    throw ConfigError("stage-1 scale range must satisfy 1 <= scale_min <= scale_max <= 4");
  }
  if (val_every < 0 || grad_clip < 0.0) throw ConfigError("val_every and grad_clip must be non-negative");
}

LrSchedule TrainPlan::schedule() const { return LrSchedule{lr_max, lr_min, warmup, epochs}; }

Tensor l1_loss(const Tensor& pred, const Tensor& target) { return mean_abs_diff(pred, target); }

QueryBatch sample_queries(const TrainSample& s) {
  QueryBatch q;
  q.feature_index.reserve(s.queries.size());
  q.coords.reserve(s.queries.size());
  for (const auto& p : s.queries) {
    const QueryLocation loc = locate_query(p.row, p.col, s.hr_h, s.hr_w, s.lr.h, s.lr.w);
    q.feature_index.push_back(loc.feature_index);
    q.coords.push_back(loc.coord);
  }
  q.cell = CellVector{2.0 / s.hr_h, 2.0 / s.hr_w};
  return q;
}

Tensor query_targets(const TrainSample& s) {
  std::vector<float> v;
  v.reserve(s.queries.size() * 3);
  for (const auto& p : s.queries) v.insert(v.end(), p.rgb, p.rgb + 3);
  return Tensor::from({s.queries.size(), 3}, std::move(v));
}

Upscaler model_upscaler(const Model& model) {
  return [&model](const ImageBuffer& lr, double s) {
    NoGradGuard guard;
    return from_tensor(model.forward(to_tensor(lr), s));
  };
}

double validation_psnr(const Model& model, const std::vector<std::pair<std::string, ImageBuffer>>& val, int scale) {
  return run_benchmark(val, scale, model_upscaler(model)).mean_psnr();
}

namespace {

[[noreturn]] void abort_non_finite(const Model& model, int stage, const TrainHooks& hooks, int epoch, int step,
                                   const std::string& what) {
  std::string where = "stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) + " step " +
                      std::to_string(step) + ": " + what;
  if (!hooks.failure_checkpoint.empty()) {
    save_checkpoint(capture(model, static_cast<std::uint8_t>(stage)), hooks.failure_checkpoint);
    where += "; last good parameters saved to " + hooks.failure_checkpoint.string();
  }
  throw NonFiniteError(where);
}

void clip_gradients(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params)
    if (p.has_grad())
      for (float g : p.grad()) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const auto f = static_cast<float>(max_norm / norm);
  for (auto& p : params)
    if (p.has_grad())
      for (float& g : p.mutable_grad()) g *= f;
}

using SampleLoss = std::function<Tensor(const Model&, const TrainSample&)>;
using BatchSampler = std::function<std::vector<TrainSample>(Rng&)>;

TrainResult run_training(Model& model, const TrainPlan& plan, const TrainData& data, std::uint64_t seed,
                         const TrainHooks& hooks, const BatchSampler& sampler, const SampleLoss& loss_fn) {
  plan.validate();
  if (data.train.empty()) throw RangeError("training set is empty");
  Rng rng(seed);
  AdamState adam;
  std::vector<Tensor> params = model.trainable();
  const LrSchedule sched = plan.schedule();
  const std::size_t draws = data.train.size() * static_cast<std::size_t>(plan.patches_per_image);
  const int steps = static_cast<int>((draws + static_cast<std::size_t>(plan.batch) - 1) / static_cast<std::size_t>(plan.batch));
  const float inv_batch = 1.0f / static_cast<float>(plan.batch);

  TrainResult result;
  for (int epoch = 0; epoch < plan.epochs; ++epoch) {
    const double lr = lr_at_epoch(sched, epoch);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (int step = 0; step < steps; ++step) {
      const auto batch = sampler(rng);
      for (auto& p : params) p.zero_grad();
      for (const auto& sample : batch) {
        const Tensor loss = loss_fn(model, sample);
        const float value = loss.item();
        if (!std::isfinite(value)) abort_non_finite(model, plan.stage, hooks, epoch, step, "loss is not finite");
        try {
          scale(loss, inv_batch).backward();
        } catch (const NonFiniteError& e) {
          abort_non_finite(model, plan.stage, hooks, epoch, step, e.what());
        }
        loss_sum += value;
        ++loss_count;
      }
      for (const auto& p : params)
        if (p.has_grad() && !all_finite(p.grad())) {
          abort_non_finite(model, plan.stage, hooks, epoch, step, "gradient is not finite");
        }
      if (plan.grad_clip > 0.0) clip_gradients(params, plan.grad_clip);
      adam_step(params, adam, lr);
    }
    EpochLog entry{epoch, lr, loss_sum / static_cast<double>(loss_count), std::nullopt};
    const bool last = epoch + 1 == plan.epochs;
    if (!data.val.empty() && plan.val_every > 0 && ((epoch + 1) % plan.val_every == 0 || last)) {
      entry.val_psnr = validation_psnr(model, data.val, plan.stage == 2 ? plan.scale : plan.val_scale);
    }
    result.log.push_back(entry);
    if (hooks.on_epoch) hooks.on_epoch(entry);
  }
  for (auto& p : params) p.zero_grad();
  result.checkpoint = capture(model, static_cast<std::uint8_t>(plan.stage), plan.save_optimizer ? &adam : nullptr);
  return result;
}

}  // namespace

TrainResult train_stage1(Model& model, const TrainPlan& plan, const TrainData& data, std::uint64_t seed,
                         const TrainHooks& hooks) {
  if (plan.stage != 1) throw ConfigError("train_stage1 needs a stage-1 plan");
  if (model.config().upsampler != UpsamplerKind::continuous) {
    throw ConfigError("stage-1 training needs the continuous upsampler");
  }
  Stage1Options opt;
  opt.lr_size = plan.lr_size;
  opt.q_count = plan.q_count;
  opt.scale_min = plan.scale_min;
  opt.scale_max = plan.scale_max;
  opt.augment = plan.augment;
  auto sampler = [&](Rng& rng) { return sample_stage1_batch(data.train, rng, plan.batch, opt); };
  auto loss = [](const Model& m, const TrainSample& s) {
    const Tensor lr = to_tensor(s.lr);
    return l1_loss(m.upsample_queries(m.features(lr), sample_queries(s), lr), query_targets(s));
  };
  return run_training(model, plan, data, seed, hooks, sampler, loss);
}

TrainResult train_stage2(Model& model, const TrainPlan& plan, const TrainData& data, std::uint64_t seed,
                         const TrainHooks& hooks) {
  if (plan.stage != 2) throw ConfigError("train_stage2 needs a stage-2 plan");
  if (model.config().upsampler != UpsamplerKind::discrete) {
    throw ConfigError("stage-2 training needs the discrete upsampler");
  }
  if (model.config().discrete_scale() != plan.scale) {
    throw ConfigError("model scale x" + std::to_string(model.config().discrete_scale()) + " differs from plan scale x" +
                      std::to_string(plan.scale));
  }
  Stage2Options opt;
  opt.lr_size = plan.lr_size;
  opt.scale = plan.scale;
  opt.augment = plan.augment;
  auto sampler = [&](Rng& rng) { return sample_stage2_batch(data.train, rng, plan.batch, opt); };
  auto loss = [](const Model& m, const TrainSample& s) {
    return l1_loss(m.forward(to_tensor(s.lr), s.scale), to_tensor(s.hr));
  };
  return run_training(model, plan, data, seed, hooks, sampler, loss);
}

std::string log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,lr,train_loss,val_psnr\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,", e.epoch, e.lr, e.train_loss);
    out += buf;
    if (e.val_psnr) {
      std::snprintf(buf, sizeof buf, "%.6f", *e.val_psnr);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace c2d
