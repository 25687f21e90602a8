#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace mfa {

enum class Split { train, validation, test };

Split parse_split(std::string_view name);
std::string to_string(Split split);

struct ManifestEntry {
  std::string id;
  Split split = Split::train;
  std::string temporal_path;  // relative to the dataset root
  std::string motion_path;
  std::vector<std::string> attributes;
  std::vector<std::string> captions;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// JSON manifest: {"videos": [{"attributes", "captions", "id", "motion", "split", "temporal"}]}.
/// Keys are written in sorted order so saving is canonical.
struct Manifest {
  std::vector<ManifestEntry> videos;

  /// Unique ids, nonempty feature paths.
  void validate() const;
  std::array<std::size_t, 3> split_counts() const;

  std::string to_json() const;
  static Manifest parse(const std::string& text);

  static Manifest load(const std::string& path);
  void save(const std::string& path) const;
  /// Throws FormatError if any referenced feature file is missing under root.
  void check_files(const std::string& root) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

}  // namespace mfa
