#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "c2d/config.hpp"
#include "c2d/pipeline.hpp"

using namespace c2d;

namespace {

struct Common {
  std::string config = "preset:desk";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

RunConfig resolve(const Common& c) {
  RunConfig rc = load_config(c.config);
  for (const auto& s : c.sets) apply_override(rc, s);
  if (c.seed) rc.run.seed = *c.seed;
  if (!c.out_dir.empty()) rc.run.out_dir = c.out_dir;
  if (!rc.run.ablation.empty()) {
    const std::string name = rc.run.ablation;
    apply_ablation(rc, name);
  }
  rc.validate();
  return rc;
}

void announce(const RunConfig& rc) {
  std::printf("# resolved config (hash %s)\n%s\n", hex64(run_hash(rc)).c_str(), to_ini(rc).c_str());
  std::fflush(stdout);
}

void print_epoch(int stage, const EpochLog& e) {
  std::printf("stage %d epoch %d lr %.3g loss %.5f", stage, e.epoch, e.lr, e.train_loss);
  if (e.val_psnr) std::printf(" val_psnr %.3f", *e.val_psnr);
  std::printf("\n");
  std::fflush(stdout);
}

std::pair<int, int> parse_hw(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("expected HxW, got '" + s + "'");
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("expected HxW, got '" + s + "'");
  }
}

void print_report(const char* label, const MetricReport& r) {
  std::printf("%s: mean PSNR %.3f dB, mean SSIM %.4f over %zu images (x%g, %s, border %d)\n", label, r.mean_psnr(),
              r.mean_ssim(), r.rows.size(), r.scale, r.on_y ? "Y" : "RGB", r.border);
}

int cmd_train1(const RunConfig& rc) {
  ensure_dataset(rc);
  const TrainData data = load_train_data(rc);
  const auto out = run_stage1(rc, data, print_epoch);
  std::printf("stage-1 checkpoint: %s\nlog: %s\n", out.checkpoint.c_str(), out.log.c_str());
  return 0;
}

int cmd_train2(const RunConfig& rc, const std::string& from) {
  ensure_dataset(rc);
  const TrainData data = load_train_data(rc);
  std::optional<Checkpoint> ck1;
  if (!rc.run.skip_stage1) {
    const std::filesystem::path src = from.empty() ? std::filesystem::path(rc.run.out_dir) / "stage1.ckpt" : std::filesystem::path(from);
    ck1 = load_checkpoint(src);
  }
  const auto out = run_stage2(rc, data, ck1, print_epoch);
  std::printf("stage-2 checkpoint: %s\nlog: %s\n", out.checkpoint.c_str(), out.log.c_str());
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& ckpt_path) {
  ensure_dataset(rc);
  const TrainData data = load_train_data(rc);
  const std::filesystem::path src =
      ckpt_path.empty() ? std::filesystem::path(rc.run.out_dir) / "stage2.ckpt" : std::filesystem::path(ckpt_path);
  const auto out = run_eval(rc, load_checkpoint(src), data);
  print_report("model", out.model);
  print_report("bicubic", out.bicubic);
  std::printf("delta %.3f dB\nreport: %s\n", out.model.mean_psnr() - out.bicubic.mean_psnr(), out.model_csv.c_str());
  return 0;
}

int cmd_infer(const RunConfig& rc, const std::string& ckpt_path, const std::string& input, const std::string& output,
              double scale) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const ModelConfig cfg = ck.stage == 1 ? rc.stage1_model() : rc.stage2_model();
  const Model model = load_model(cfg, ck);
  const ImageBuffer lr = load_png(input);
  const double s = ck.stage == 1 ? scale : cfg.scale;
  const ImageBuffer sr = model_upscaler(model)(lr, s);
  save_png(sr, output);
  std::printf("%dx%d -> %dx%d (x%g) written to %s\n", lr.h, lr.w, sr.h, sr.w, s, output.c_str());
  return 0;
}

int cmd_complexity(const RunConfig& rc, const std::string& out_hw, int stage) {
  const auto [h, w] = parse_hw(out_hw);
  const ModelConfig cfg = stage == 1 ? rc.stage1_model() : rc.stage2_model();
  const ComplexityReport rep = complexity(cfg, h, w);
  std::printf("module,params,macs\n");
  for (const auto& m : rep.modules) {
    std::printf("%s,%llu,%llu\n", m.name.c_str(), static_cast<unsigned long long>(m.params),
                static_cast<unsigned long long>(m.macs));
  }
  std::printf("#Para. %.1fK (%llu)\nFLOPs %.2fG (%llu multiply-adds) at %dx%d output\n", rep.total_params() / 1e3,
              static_cast<unsigned long long>(rep.total_params()), rep.total_macs() / 1e9,
              static_cast<unsigned long long>(rep.total_macs()), h, w);
  return 0;
}

int cmd_ablation(const RunConfig& base, const std::vector<std::string>& names) {
  std::vector<std::string> runs = names;
  if (runs.empty() || (runs.size() == 1 && runs[0] == "all")) runs = ablation_names();
  std::vector<std::pair<std::string, double>> rows;
  std::vector<std::string> variants{"full"};
  variants.insert(variants.end(), runs.begin(), runs.end());
  for (const auto& name : variants) {
    RunConfig rc = base;
    if (name != "full") apply_ablation(rc, name);
    if (rc.data.root.empty()) rc.data.root = data_root(base).string();
    rc.run.out_dir = (std::filesystem::path(base.run.out_dir) / name).string();
    std::printf("== %s (hash %s)\n", name.c_str(), hex64(run_hash(rc)).c_str());
    std::fflush(stdout);
    const auto out = run_pipeline(rc, print_epoch);
    rows.emplace_back(name, out.eval.model.mean_psnr());
    std::printf("%s: %.3f dB\n", name.c_str(), rows.back().second);
  }
  std::printf("variant,psnr_db,delta_db\n");
  for (const auto& [name, psnr_db] : rows) std::printf("%s,%.3f,%+.3f\n", name.c_str(), psnr_db, psnr_db - rows[0].second);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-to-discrete super-resolution: data, training, evaluation and complexity tools"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI/JSON config file or preset:<name>");
    sub->add_option("--set", common.sets, "Override, section.key=value (repeatable)");
    sub->add_option("--seed", common.seed, "Run seed");
    sub->add_option("--out-dir", common.out_dir, "Output directory");
  };

  auto* gen = app.add_subcommand("gen-data", "Write the synthetic train/val sets");
  auto* train1 = app.add_subcommand("train1", "Stage 1: continuous-scale pre-training");
  auto* train2 = app.add_subcommand("train2", "Stage 2: discrete-scale fine-tuning");
  auto* eval = app.add_subcommand("eval", "Benchmark a stage-2 checkpoint against bicubic");
  auto* infer = app.add_subcommand("infer", "Super-resolve one PNG");
  auto* cx = app.add_subcommand("complexity", "Parameter and FLOP accounting");
  auto* abl = app.add_subcommand("ablation", "Run ablation variants");
  auto* pipe = app.add_subcommand("pipeline", "gen-data, train1, train2 and eval in one go");
  for (auto* s : {gen, train1, train2, eval, infer, cx, abl, pipe}) add_common(s);

  std::string from, ckpt, input, output, out_hw = "720x1280";
  double scale = 2.0;
  int stage = 2;
  std::vector<std::string> variants;
  train2->add_option("--from", from, "Stage-1 checkpoint (default <out-dir>/stage1.ckpt)");
  eval->add_option("--checkpoint", ckpt, "Stage-2 checkpoint (default <out-dir>/stage2.ckpt)");
  infer->add_option("--checkpoint", ckpt, "Checkpoint")->required();
  infer->add_option("--input", input, "Input PNG")->required();
  infer->add_option("--output", output, "Output PNG")->required();
  infer->add_option("--scale", scale, "Scale for stage-1 (continuous) checkpoints");
  cx->add_option("--out-hw", out_hw, "Output extents HxW");
  cx->add_option("--stage", stage, "1: continuous model, 2: discrete model")->check(CLI::Range(1, 2));
  abl->add_option("--preset", variants, "v1.1 v2.1 v3.1 v3.2 v3.3 v3.4 or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig rc = resolve(common);
    if (!cx->parsed()) announce(rc);
    if (gen->parsed()) {
      ensure_dataset(rc);
      std::printf("dataset at %s\n", data_root(rc).c_str());
      return 0;
    }
    if (train1->parsed()) return cmd_train1(rc);
    if (train2->parsed()) return cmd_train2(rc, from);
    if (eval->parsed()) return cmd_eval(rc, ckpt);
    if (infer->parsed()) return cmd_infer(rc, ckpt, input, output, scale);
    if (cx->parsed()) return cmd_complexity(rc, out_hw, stage);
    if (abl->parsed()) return cmd_ablation(rc, variants);
    if (pipe->parsed()) {
      const auto out = run_pipeline(rc, print_epoch);
      print_report("model", out.eval.model);
      print_report("bicubic", out.eval.bicubic);
      return 0;
    }
  } catch (const UnknownKeyError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
