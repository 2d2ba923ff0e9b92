#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "propspan/autograd/parameters.hpp"

namespace propspan::ag {

// Binary layout (all integers little-endian), see docs/checkpoint-format.md:
//   magic "PROPSPAN" | u32 version | u64 config bytes | config (UTF-8 JSON)
//   u32 tensor count | per tensor: u32 name bytes, name, u32 rank, u64 dims[rank],
//   f32 values[prod(dims)]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string config;
  std::vector<StoredTensor> tensors;
};

std::string serialize_checkpoint(const std::string& config, const ParameterList<float>& params);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const std::string& config,
                     const ParameterList<float>& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes stored values into equally named parameters. The name sets and shapes
/// must agree exactly.
void restore_parameters(const Checkpoint& checkpoint, const ParameterList<float>& params);

}  // namespace propspan::ag
