#include "c2d/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace c2d {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long long parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  const long long x = parse_integer(key, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key + ": value out of range");
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used == v.size() && v.find('-') == std::string::npos) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<int> parse_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define C2D_INT(path, field) \
  Key{path, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_int(k, v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define C2D_U64(path, field) \
  Key{path, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_u64(k, v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define C2D_DBL(path, field) \
  Key{path, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_double(k, v); }, \
      [](const RunConfig& c) { return fmt_double(c.field); }}
#define C2D_BOOL(path, field) \
  Key{path, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_bool(k, v); }, \
      [](const RunConfig& c) { return fmt_bool(c.field); }}
#define C2D_STR(path, field) \
  Key{path, [](RunConfig& c, const std::string&, const std::string& v) { c.field = v; }, \
      [](const RunConfig& c) { return c.field; }}

void add_plan_keys(std::vector<Key>& keys, const std::string& s, TrainPlan RunConfig::*plan) {
  auto add_int = [&](const std::string& name, int TrainPlan::*f) {
    keys.push_back({s + "." + name,
                    [plan, f](RunConfig& c, const std::string& k, const std::string& v) { (c.*plan).*f = parse_int(k, v); },
                    [plan, f](const RunConfig& c) { return std::to_string((c.*plan).*f); }});
  };
  auto add_dbl = [&](const std::string& name, double TrainPlan::*f) {
    keys.push_back({s + "." + name,
                    [plan, f](RunConfig& c, const std::string& k, const std::string& v) { (c.*plan).*f = parse_double(k, v); },
                    [plan, f](const RunConfig& c) { return fmt_double((c.*plan).*f); }});
  };
  auto add_bool = [&](const std::string& name, bool TrainPlan::*f) {
    keys.push_back({s + "." + name,
                    [plan, f](RunConfig& c, const std::string& k, const std::string& v) { (c.*plan).*f = parse_bool(k, v); },
                    [plan, f](const RunConfig& c) { return fmt_bool((c.*plan).*f); }});
  };
  add_dbl("lr_max", &TrainPlan::lr_max);
  add_dbl("lr_min", &TrainPlan::lr_min);
  add_int("epochs", &TrainPlan::epochs);
  add_int("warmup", &TrainPlan::warmup);
  add_int("batch", &TrainPlan::batch);
  add_int("patches_per_image", &TrainPlan::patches_per_image);
  if (s == "stage1") {
    add_int("q_count", &TrainPlan::q_count);
    add_dbl("scale_min", &TrainPlan::scale_min);
    add_dbl("scale_max", &TrainPlan::scale_max);
    add_int("val_scale", &TrainPlan::val_scale);
  } else {
    add_int("scale", &TrainPlan::scale);
  }
  add_int("val_every", &TrainPlan::val_every);
  add_dbl("grad_clip", &TrainPlan::grad_clip);
  add_bool("augment", &TrainPlan::augment);
  add_bool("save_optimizer", &TrainPlan::save_optimizer);
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k{
        C2D_INT("model.channels", model.channels),
        C2D_INT("model.blocks", model.blocks),
        Key{"model.windows",
            [](RunConfig& c, const std::string& key, const std::string& v) { c.model.windows = parse_list(key, v); },
            [](const RunConfig& c) { return fmt_list(c.model.windows); }},
        C2D_INT("model.patch", model.patch),
        C2D_DBL("model.ffn_ratio", model.ffn_ratio),
        C2D_INT("model.ffn_dwconv_kernel", model.ffn_dwconv_kernel),
        C2D_BOOL("model.ffn_prenorm", model.ffn_prenorm),
        C2D_BOOL("model.embed_activation", model.embed_activation),
        C2D_BOOL("model.hier_encoding", model.hier_encoding),
        C2D_BOOL("model.unet", model.unet),
        C2D_BOOL("model.block_conv", model.block_conv),
        C2D_BOOL("model.block_residual", model.block_residual),
        C2D_BOOL("model.long_residual", model.long_residual),
        C2D_BOOL("model.pad_to_window_multiple", model.pad_to_window_multiple),
        C2D_INT("model.attn_heads", model.attn_heads),
        C2D_BOOL("model.mean_shift", model.mean_shift),
        C2D_BOOL("model.hiif_unfold", model.hiif_unfold),
        C2D_BOOL("model.image_skip", model.image_skip),
    };
    add_plan_keys(k, "stage1", &RunConfig::stage1);
    add_plan_keys(k, "stage2", &RunConfig::stage2);
    const std::vector<Key> rest{
        C2D_STR("data.root", data.root),
        C2D_INT("data.train_images", data.train_images),
        C2D_INT("data.val_images", data.val_images),
        C2D_INT("data.train_size", data.train_size),
        C2D_INT("data.val_size", data.val_size),
        C2D_U64("data.seed", data.seed),
        C2D_BOOL("eval.on_y", eval.on_y),
        C2D_INT("eval.border", eval.border),
        C2D_INT("eval.scale", eval.scale),
        C2D_U64("run.seed", run.seed),
        C2D_STR("run.out_dir", run.out_dir),
        C2D_STR("run.ablation", run.ablation),
        C2D_BOOL("run.skip_stage1", run.skip_stage1),
    };
    k.insert(k.end(), rest.begin(), rest.end());
    return k;
  }();
  return keys;
}

#undef C2D_INT
#undef C2D_U64
#undef C2D_DBL
#undef C2D_BOOL
#undef C2D_STR

const Key& find_key(const std::string& name) {
  for (const auto& k : key_table())
    if (k.name == name) return k;
  throw UnknownKeyError(name);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

RunConfig::RunConfig() {
  // Desk-scale protocol.
  model.image_skip = true;
  model.hiif_unfold = true;
  stage1.stage = 1;
  stage1.lr_max = 2e-3;
  stage1.lr_min = 1e-6;
  stage1.epochs = 30;
  stage1.warmup = 3;
  stage1.batch = 4;
  stage1.q_count = 1024;
  stage1.val_every = 5;
  stage2 = TrainPlan::stage2_defaults();
  stage2.lr_max = 1e-3;
  stage2.epochs = 15;
  stage2.warmup = 0;
  stage2.batch = 4;
  stage2.val_every = 5;
}

void RunConfig::validate() const {
  model.validate();
  stage1_model().validate();
  stage2_model().validate();
  TrainPlan p1 = stage1;
  p1.lr_size = model.patch;
  p1.validate();
  TrainPlan p2 = stage2;
  p2.lr_size = model.patch;
  p2.validate();
  if (stage1.stage != 1 || stage2.stage != 2) throw ConfigError("stage tags are fixed");
  if (data.train_images < 1 || data.val_images < 1) throw ConfigError("data image counts must be positive");
  if (data.train_size < 4 * model.patch) {
    throw ConfigError("data.train_size must hold a 4x HR crop of model.patch (" + std::to_string(4 * model.patch) + ")");
  }
  if (data.val_size < 11 + 2 * 4) throw ConfigError("data.val_size too small for SSIM");
  if (eval.scale < 2 || eval.scale > 4) throw ConfigError("eval.scale must be 2, 3 or 4");
  if (run.out_dir.empty()) throw ConfigError("run.out_dir must not be empty");
}

ModelConfig RunConfig::stage1_model() const {
  ModelConfig m = model;
  m.upsampler = UpsamplerKind::continuous;
  m.scale = stage1.val_scale;
  return m;
}

ModelConfig RunConfig::stage2_model() const {
  ModelConfig m = model;
  m.upsampler = UpsamplerKind::discrete;
  m.scale = stage2.scale;
  return m;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

void set_value(RunConfig& rc, const std::string& key, const std::string& value) {
  find_key(key).set(rc, key, trim(value));
}

std::string get_value(const RunConfig& rc, const std::string& key) { return find_key(key).get(rc); }

void apply_override(RunConfig& rc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_value(rc, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void apply_ini(RunConfig& rc, const std::string& text) {
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    set_value(rc, section.empty() ? key : section + "." + key, line.substr(eq + 1));
  }
}

void apply_json(RunConfig& rc, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object of sections");
  auto scalar = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return fmt_double(v.get<double>());
    throw ConfigError("unsupported JSON value " + v.dump());
  };
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("JSON section '" + section + "' must be an object");
    for (const auto& [key, v] : body.items()) {
      std::string value;
      if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) value += (i ? "," : "") + scalar(v[i]);
      } else {
        value = scalar(v);
      }
      set_value(rc, section + "." + key, value);
    }
  }
}

RunConfig load_config(const std::string& source) {
  if (source.starts_with("preset:")) return preset(source.substr(7));
  const std::filesystem::path path(source);
  RunConfig rc;
  const std::string text = read_file(path);
  if (path.extension() == ".json") {
    apply_json(rc, text);
  } else {
    apply_ini(rc, text);
  }
  return rc;
}

std::vector<std::string> preset_names() {
  return {"desk", "swinir-c2d-x2", "swinir-c2d-x3", "swinir-c2d-x4", "srformer-c2d-x2", "srformer-c2d-x3",
          "srformer-c2d-x4"};
}

RunConfig preset(const std::string& name) {
  RunConfig rc;
  if (name == "desk") return rc;
  const bool swinir = name.starts_with("swinir-c2d-x");
  const bool srformer = name.starts_with("srformer-c2d-x");
  if (!(swinir || srformer) || name.size() < 2) throw ConfigError("unknown preset '" + name + "'");
  const int s = name.back() - '0';
  if (s < 2 || s > 4) throw ConfigError("unknown preset '" + name + "'");
  rc.model.channels = 60;
  rc.model.blocks = 4;
  rc.model.windows = {64, 32, 8, 8, 32, 64};
  rc.model.patch = 64;
  rc.model.ffn_ratio = 2.0;
  rc.model.block_conv = true;
  rc.model.ffn_dwconv_kernel = srformer ? 5 : 0;
  rc.model.image_skip = false;
  rc.model.hiif_unfold = false;
  rc.stage1 = TrainPlan::stage1_defaults();
  rc.stage2 = TrainPlan::stage2_defaults();
  rc.stage2.scale = s;
  rc.eval.scale = s;
  rc.data.train_size = 512;
  rc.data.val_size = 256;
  rc.data.train_images = 800;
  rc.data.val_images = 100;
  rc.run.out_dir = "runs/" + name;
  return rc;
}

std::vector<std::string> ablation_names() { return {"v1.1", "v2.1", "v3.1", "v3.2", "v3.3", "v3.4"}; }

void apply_ablation(RunConfig& rc, const std::string& name) {
  auto& w = rc.model.windows;
  if (name == "v1.1") {
    rc.run.skip_stage1 = true;
  } else if (name == "v2.1") {
    rc.model.hier_encoding = false;
  } else if (name == "v3.1") {
    rc.model.unet = false;
  } else if (name == "v3.2") {
    for (int& x : w) x = std::max(1, x / 2);
  } else if (name == "v3.3") {
    const std::size_t half = w.size() / 2;
    std::reverse(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(half));
    std::reverse(w.end() - static_cast<std::ptrdiff_t>(half), w.end());
  } else if (name == "v3.4") {
    const int m = *std::max_element(w.begin(), w.end());
    std::fill(w.begin(), w.end(), m);
  } else {
    throw ConfigError("unknown ablation preset '" + name + "'");
  }
  rc.run.ablation = name;
}

std::string to_ini(const RunConfig& rc) {
  std::string out, section;
  for (const auto& k : key_table()) {
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += k.name.substr(dot + 1) + " = " + k.get(rc) + "\n";
  }
  return out;
}

std::uint64_t run_hash(const RunConfig& rc) {
  // Locations do not change results.
  std::string text;
  for (const auto& k : key_table())
    if (k.name != "run.out_dir" && k.name != "data.root") text += k.name + "=" + k.get(rc) + "\n";
  return fnv1a64(text);
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace c2d
