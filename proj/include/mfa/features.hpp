#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfa/numerics.hpp"

namespace mfa {

// Feature file layout (little-endian):
//   "MFAF" | u32 version = 1 | u32 count | u32 dim | count*dim f32
inline constexpr char kFeatureMagic[4] = {'M', 'F', 'A', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;

std::vector<std::uint8_t> encode_features(const std::vector<Vec>& vectors);
std::vector<Vec> decode_features(std::span<const std::uint8_t> bytes);

std::vector<Vec> read_features(const std::string& path);
void write_features(const std::string& path, const std::vector<Vec>& vectors);

}  // namespace mfa
