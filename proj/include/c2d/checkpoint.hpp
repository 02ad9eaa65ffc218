#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "c2d/model.hpp"
#include "c2d/optim.hpp"

namespace c2d {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

// In-memory form of the binary checkpoint: "C2DK", u32 version, u64 config
// hash, u8 stage, u32 tensor count, then per tensor u16 name length, name,
// u8 rank, u32 extents and little-endian float32 values. Optimizer moments,
// when present, are tensors named "optim.m.<param>", "optim.v.<param>" and
// "optim.step".
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::uint8_t stage = 0;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  bool has_optimizer() const { return find("optim.step") != nullptr; }
};

Checkpoint capture(const Model& model, std::uint8_t stage, const AdamState* optim = nullptr);

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every parameter of the checkpoint into the model. The config hash
// must match and every model parameter must be present with equal shape.
void restore(Model& model, const Checkpoint& ckpt);
// Rebuilds Adam moments for the model's parameter order; nullopt when the
// checkpoint carries none.
std::optional<AdamState> restore_optimizer(const Model& model, const Checkpoint& ckpt);

// New stage-2 model: f_S and f_D ("shallow." and "deep." tensors) copied from
// a stage-1 checkpoint, upsampler freshly initialized from seed.
Model transfer_weights(const Checkpoint& stage1, const ModelConfig& cfg2, std::uint64_t seed);

}  // namespace c2d
