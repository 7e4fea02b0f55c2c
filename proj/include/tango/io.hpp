#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tango/latent.hpp"
#include "tango/tensor.hpp"

namespace tango {

// Versioned flat binary: magic "TANGOCKP", u32 version, string->string
// metadata, then named tensors (name, rank, dims, f64 data). Little-endian.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  void add(std::string name, Tensor tensor);
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Sampled latents with their provenance: shape, seed, schedule fingerprint
// and config fingerprint, then count * numel f64 values.
struct LatentDump {
  static constexpr std::uint32_t kVersion = 1;

  LatentShape shape;
  std::uint64_t seed = 0;
  std::uint64_t schedule_hash = 0;
  std::uint64_t config_hash = 0;
  std::vector<LatentTensor> latents;
};

void save_latents(const std::filesystem::path& path, const LatentDump& dump);
LatentDump load_latents(const std::filesystem::path& path);

// Rows of "name,v0,v1,..." preceded by "# shape=CxTxF seed=... schedule=...".
void save_latents_csv(const std::filesystem::path& path, const LatentDump& dump);

}  // namespace tango
