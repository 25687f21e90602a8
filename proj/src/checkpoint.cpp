#include "mfa/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "mfa/errors.hpp"

namespace mfa {

namespace {

constexpr std::uint32_t kTemporalBit = 1u << 0;
constexpr std::uint32_t kMotionBit = 1u << 1;
constexpr std::uint32_t kSemanticBit = 1u << 2;
constexpr std::uint32_t kTanhCellBit = 1u << 3;
constexpr std::uint32_t kFusionShift = 8;
constexpr std::uint32_t kFusionMask = 3u << kFusionShift;
constexpr std::uint32_t kKnownBits = kTemporalBit | kMotionBit | kSemanticBit | kTanhCellBit | kFusionMask;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto raw = std::bit_cast<std::array<char, sizeof(T)>>(v);
    bytes.insert(bytes.end(), raw.begin(), raw.end());
  }
  std::vector<char> bytes;
};

class Reader {
 public:
  Reader(const std::vector<char>& b, const std::string& path) : bytes_(b), path_(path) {}
  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError(path_ + ": truncated checkpoint reading " + what + " at byte offset " +
                        std::to_string(pos_));
    }
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return std::bit_cast<T>(raw);
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<char>& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint32_t option_bits(const ModelConfig& c) {
  std::uint32_t bits = 0;
  if (c.branches.temporal) bits |= kTemporalBit;
  if (c.branches.motion) bits |= kMotionBit;
  if (c.branches.semantic) bits |= kSemanticBit;
  if (c.cell_output_tanh) bits |= kTanhCellBit;
  bits |= static_cast<std::uint32_t>(c.fusion) << kFusionShift;
  return bits;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, const ModelConfig& config,
                     std::uint64_t vocab_hash) {
  if (!(params.dims == config.dims)) throw ConsistencyError("save_checkpoint: params and config dims differ");
  Writer w;
  w.bytes.insert(w.bytes.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  const Dims& d = params.dims;
  for (std::size_t x : {d.vocab, d.embed, d.hidden, d.temporal, d.motion}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(x));
  }
  w.put<std::uint64_t>(vocab_hash);
  w.put<std::uint32_t>(option_bits(config));
  const Vec values = params.flatten();
  w.put<std::uint64_t>(values.size());
  for (double v : values) w.put<double>(v);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
  out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
}

Checkpoint load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(bytes, path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError(path + ": bad checkpoint magic at byte offset 0");
  }
  r.get<std::uint32_t>("magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  Dims& d = ck.config.dims;
  d.vocab = r.get<std::uint32_t>("dims");
  d.embed = r.get<std::uint32_t>("dims");
  d.hidden = r.get<std::uint32_t>("dims");
  d.temporal = r.get<std::uint32_t>("dims");
  d.motion = r.get<std::uint32_t>("dims");
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  ck.vocab_hash = r.get<std::uint64_t>("vocab hash");
  if (expected_vocab_hash && *expected_vocab_hash != ck.vocab_hash) {
    throw ConsistencyError(path + ": checkpoint was trained with a different vocabulary");
  }
  const auto bits = r.get<std::uint32_t>("options");
  const std::uint32_t fusion = (bits & kFusionMask) >> kFusionShift;
  if ((bits & ~kKnownBits) != 0 || fusion > static_cast<std::uint32_t>(Activation::identity)) {
    throw FormatError(path + ": unknown checkpoint option bits");
  }
  ck.config.branches = {(bits & kTemporalBit) != 0, (bits & kMotionBit) != 0, (bits & kSemanticBit) != 0};
  ck.config.cell_output_tanh = (bits & kTanhCellBit) != 0;
  ck.config.fusion = static_cast<Activation>(fusion);

  ck.params = ModelParams::zeros(d);
  const auto count = r.get<std::uint64_t>("value count");
  if (count != ck.params.num_values()) {
    throw FormatError(path + ": checkpoint holds " + std::to_string(count) + " values, dims imply " +
                      std::to_string(ck.params.num_values()));
  }
  if (bytes.size() - r.pos() != count * sizeof(double)) {
    throw FormatError(path + ": payload size does not match value count");
  }
  Vec values(count);
  for (auto& v : values) v = r.get<double>("values");
  ck.params.unflatten(values);
  return ck;
}

}  // namespace mfa
