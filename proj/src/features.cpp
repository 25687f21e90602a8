#include "mfa/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mfa/errors.hpp"

namespace mfa {

namespace {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

std::string at(std::size_t off) { return " at byte offset " + std::to_string(off); }

}  // namespace

std::vector<std::uint8_t> encode_features(const std::vector<Vec>& vectors) {
  if (vectors.empty()) throw DomainError("write_features: feature list is empty");
  const std::size_t dim = vectors.front().size();
  if (dim == 0) throw DomainError("write_features: zero-width vectors");
  std::vector<std::uint8_t> out;
  out.reserve(16 + vectors.size() * dim * 4);
  out.insert(out.end(), std::begin(kFeatureMagic), std::end(kFeatureMagic));
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(vectors.size()));
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (vectors[r].size() != dim) {
      throw ShapeError("write_features: vector " + std::to_string(r) + " has width " +
                       std::to_string(vectors[r].size()) + ", expected " + std::to_string(dim));
    }
    for (double x : vectors[r]) {
      const auto f = static_cast<float>(x);
      if (!std::isfinite(f)) throw NumericError("write_features: non-finite value in vector " + std::to_string(r));
      put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

std::vector<Vec> decode_features(std::span<const std::uint8_t> b) {
  if (b.size() < 16) throw FormatError("feature file: truncated header" + at(b.size()));
  if (std::memcmp(b.data(), kFeatureMagic, 4) != 0) throw FormatError("feature file: bad magic" + at(0));
  const std::uint32_t version = get_u32(b, 4);
  if (version != kFeatureVersion) {
    throw FormatError("feature file: unsupported version " + std::to_string(version) + at(4));
  }
  const std::uint32_t count = get_u32(b, 8);
  const std::uint32_t dim = get_u32(b, 12);
  if (count == 0) throw DomainError("feature file: count is 0 (features must be nonempty)");
  if (dim == 0) throw FormatError("feature file: dim is 0" + at(12));
  const std::size_t expected = 16 + static_cast<std::size_t>(count) * dim * 4;
  if (b.size() < expected) {
    throw FormatError("feature file: truncated payload, expected " + std::to_string(expected) +
                      " bytes" + at(b.size()));
  }
  if (b.size() > expected) throw FormatError("feature file: trailing bytes" + at(expected));
  std::vector<Vec> out(count, Vec(dim));
  std::size_t off = 16;
  for (std::uint32_t r = 0; r < count; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c, off += 4) {
      const float f = std::bit_cast<float>(get_u32(b, off));
      if (!std::isfinite(f)) throw FormatError("feature file: non-finite value" + at(off));
      out[r][c] = f;
    }
  }
  return out;
}

std::vector<Vec> read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_features(const std::string& path, const std::vector<Vec>& vectors) {
  const auto bytes = encode_features(vectors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write feature file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace mfa
