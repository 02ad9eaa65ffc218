#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "c2d/errors.hpp"
#include "c2d/model.hpp"
#include "c2d/trainer.hpp"

namespace c2d {

class UnknownKeyError : public ConfigError {
 public:
  explicit UnknownKeyError(const std::string& key)
      : ConfigError("unknown config key '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct DataConfig {
  std::string root;  // holds train/hr and val/hr; empty: $C2D_DATA_ROOT, else <out_dir>/data
  int train_images = 64;
  int val_images = 16;
  int train_size = 192;
  int val_size = 128;
  std::uint64_t seed = 1234;
};

struct EvalConfig {
  bool on_y = true;
  int border = -1;  // negative: crop s pixels
  int scale = 2;
};

struct RunSection {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/desk";
  std::string ablation;       // applied by apply_ablation, recorded for provenance
  bool skip_stage1 = false;   // stage-2-only training from scratch
};

// Model fields are shared by both stages; the upsampler and scale are set per
// stage (continuous for stage 1, discrete at stage2.scale for stage 2).
struct RunConfig {
  ModelConfig model;
  TrainPlan stage1;
  TrainPlan stage2;
  DataConfig data;
  EvalConfig eval;
  RunSection run;

  RunConfig();
  void validate() const;
  ModelConfig stage1_model() const;
  ModelConfig stage2_model() const;
};

// Every accepted key, "section.key", in canonical order.
std::vector<std::string> config_keys();
void set_value(RunConfig& rc, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& rc, const std::string& key);

// "key=value" override.
void apply_override(RunConfig& rc, const std::string& assignment);
// INI text: [section] headers, key = value lines, '#' or ';' comments.
void apply_ini(RunConfig& rc, const std::string& text);
// JSON object of sections; arrays become comma lists.
void apply_json(RunConfig& rc, const std::string& text);
// Loads a file (.json parsed as JSON, anything else as INI) or a built-in
// "preset:<name>".
RunConfig load_config(const std::string& source);

std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

// Ablation variants as config transformations: v1.1 (no stage 1), v2.1
// (no hierarchical encoding), v3.1 (linear block), v3.2 (halved windows),
// v3.3 (window order inverted per half), v3.4 (all windows at the maximum).
std::vector<std::string> ablation_names();
void apply_ablation(RunConfig& rc, const std::string& name);

// Resolved config as INI.
std::string to_ini(const RunConfig& rc);
// FNV-1a 64 over every key except run.out_dir and data.root.
std::uint64_t run_hash(const RunConfig& rc);
std::string hex64(std::uint64_t v);

}  // namespace c2d
