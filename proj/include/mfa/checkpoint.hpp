#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mfa/model.hpp"

namespace mfa {

// Checkpoint layout (little-endian):
//   "MFAC" | u32 version = 1 | u32 V, d_e, d_h, d_v, d_f | u64 vocab hash
//   | u32 option bits | u64 value count | f64 values, blocks in ModelParams order
inline constexpr char kCheckpointMagic[4] = {'M', 'F', 'A', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::uint64_t vocab_hash = 0;
};

void save_checkpoint(const std::string& path, const ModelParams& params, const ModelConfig& config,
                     std::uint64_t vocab_hash);

/// Throws ConsistencyError when expected_vocab_hash is given and differs.
Checkpoint load_checkpoint(const std::string& path,
                           std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace mfa
