#include "c2d/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "c2d/errors.hpp"

namespace c2d {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

Checkpoint capture(const Model& model, std::uint8_t stage, const AdamState* optim) {
  Checkpoint ck;
  ck.config_hash = config_hash(model.config());
  ck.stage = stage;
  const auto& entries = model.params().entries();
  for (const auto& [name, t] : entries) {
    ck.tensors.push_back({name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())});
  }
  if (optim != nullptr && !optim->m.empty()) {
    if (optim->m.size() != entries.size()) throw ShapeError("optimizer state does not match the model");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      ck.tensors.push_back({"optim.m." + entries[i].first, entries[i].second.shape(), optim->m[i]});
      ck.tensors.push_back({"optim.v." + entries[i].first, entries[i].second.shape(), optim->v[i]});
    }
    // Step count split into two exactly representable halves.
    const auto lo = static_cast<float>(optim->step & 0xFFFFu);
    const auto hi = static_cast<float>(optim->step >> 16);
    ck.tensors.push_back({"optim.step", {2}, {lo, hi}});
  }
  return ck;
}

namespace {

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  template <class T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  void take(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ck) {
  Writer w;
  w.put_bytes("C2DK", 4);
  w.put<std::uint32_t>(ck.version);
  w.put<std::uint64_t>(ck.config_hash);
  w.put<std::uint8_t>(ck.stage);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    if (t.name.size() > 0xFFFF) throw FormatError("tensor name too long: " + t.name.substr(0, 32));
    if (t.shape.size() > 0xFF) throw FormatError("tensor rank too large: " + t.name);
    if (shape_numel(t.shape) != t.values.size()) throw ShapeError("tensor " + t.name + " has inconsistent size");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (auto e : t.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
    w.put_bytes(t.values.data(), t.values.size() * sizeof(float));
  }
  return std::move(w.bytes);
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, "C2DK", 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  Checkpoint ck;
  ck.version = r.get<std::uint32_t>();
  if (ck.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(ck.version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  ck.config_hash = r.get<std::uint64_t>();
  ck.stage = r.get<std::uint8_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name.resize(r.get<std::uint16_t>());
    r.take(t.name.data(), t.name.size());
    const auto rank = r.get<std::uint8_t>();
    for (std::uint8_t k = 0; k < rank; ++k) t.shape.push_back(r.get<std::uint32_t>());
    const std::size_t n = shape_numel(t.shape);
    if (n > bytes.size()) throw FormatError("checkpoint tensor " + t.name + " larger than the file");
    t.values.resize(n);
    r.take(t.values.data(), n * sizeof(float));
    ck.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

namespace {

void copy_into(const Tensor& dst, const NamedTensor& src) {
  if (dst.shape() != src.shape) {
    throw ShapeError("tensor " + src.name + ": checkpoint shape " + shape_str(src.shape) + " vs model shape " +
                     shape_str(dst.shape()));
  }
  Tensor handle = dst;
  std::copy(src.values.begin(), src.values.end(), handle.mutable_data().begin());
}

}  // namespace

void restore(Model& model, const Checkpoint& ckpt) {
  const auto expected = config_hash(model.config());
  if (ckpt.config_hash != expected) {
    throw ConfigError("checkpoint config hash " + std::to_string(ckpt.config_hash) + " does not match model config " +
                      std::to_string(expected));
  }
  for (const auto& [name, t] : model.params().entries()) {
    const NamedTensor* src = ckpt.find(name);
    if (src == nullptr) throw FormatError("checkpoint lacks tensor " + name);
    copy_into(t, *src);
  }
}

std::optional<AdamState> restore_optimizer(const Model& model, const Checkpoint& ckpt) {
  const NamedTensor* step = ckpt.find("optim.step");
  if (step == nullptr) return std::nullopt;
  if (step->values.size() != 2) throw FormatError("malformed optim.step tensor");
  AdamState st;
  st.step = static_cast<std::uint64_t>(step->values[0]) | (static_cast<std::uint64_t>(step->values[1]) << 16);
  for (const auto& [name, t] : model.params().entries()) {
    const NamedTensor* m = ckpt.find("optim.m." + name);
    const NamedTensor* v = ckpt.find("optim.v." + name);
    if (m == nullptr || v == nullptr) throw FormatError("checkpoint lacks optimizer moments for " + name);
    if (m->values.size() != t.numel() || v->values.size() != t.numel()) {
      throw ShapeError("optimizer moments for " + name + " do not match the parameter");
    }
    st.m.push_back(m->values);
    st.v.push_back(v->values);
  }
  return st;
}

Model transfer_weights(const Checkpoint& stage1, const ModelConfig& cfg2, std::uint64_t seed) {
  Model model(cfg2, seed);
  for (const auto& [name, t] : model.params().entries()) {
    if (!name.starts_with("shallow.") && !name.starts_with("deep.")) continue;
    const NamedTensor* src = stage1.find(name);
    if (src == nullptr) throw ShapeError("stage-1 checkpoint lacks transferable tensor " + name);
    copy_into(t, *src);
  }
  return model;
}

}  // namespace c2d
