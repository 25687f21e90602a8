#include "mfa/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfa/errors.hpp"

namespace mfa {

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "val") return Split::validation;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "train";
}

void Manifest::validate() const {
  std::set<std::string> ids;
  for (const auto& v : videos) {
    if (v.id.empty()) throw FormatError("manifest: video with empty id");
    if (!ids.insert(v.id).second) throw FormatError("manifest: duplicate video id '" + v.id + "'");
    if (v.temporal_path.empty() || v.motion_path.empty()) {
      throw FormatError("manifest: video '" + v.id + "' is missing a feature path");
    }
  }
}

std::array<std::size_t, 3> Manifest::split_counts() const {
  std::array<std::size_t, 3> n{};
  for (const auto& v : videos) ++n[static_cast<std::size_t>(v.split)];
  return n;
}

std::string Manifest::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : videos) {
    nlohmann::json j;
    j["id"] = v.id;
    j["split"] = to_string(v.split);
    j["temporal"] = v.temporal_path;
    j["motion"] = v.motion_path;
    j["attributes"] = v.attributes;
    j["captions"] = v.captions;
    arr.push_back(std::move(j));
  }
  nlohmann::json root;
  root["videos"] = std::move(arr);
  return root.dump(2) + "\n";
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  try {
    const auto root = nlohmann::json::parse(text);
    for (const auto& j : root.at("videos")) {
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.split = parse_split(j.at("split").get<std::string>());
      e.temporal_path = j.at("temporal").get<std::string>();
      e.motion_path = j.at("motion").get<std::string>();
      e.attributes = j.value("attributes", std::vector<std::string>{});
      e.captions = j.value("captions", std::vector<std::string>{});
      m.videos.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void Manifest::save(const std::string& path) const {
  validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write manifest '" + path + "'");
  out << to_json();
}

void Manifest::check_files(const std::string& root) const {
  namespace fs = std::filesystem;
  for (const auto& v : videos) {
    for (const auto* rel : {&v.temporal_path, &v.motion_path}) {
      const fs::path p = fs::path(root) / *rel;
      if (!fs::exists(p)) {
        throw FormatError("manifest: video '" + v.id + "' references missing file '" + p.string() + "'");
      }
    }
  }
}

}  // namespace mfa
