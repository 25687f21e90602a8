#pragma once

#include <string>
#include <vector>

#include "mfa/manifest.hpp"
#include "mfa/metrics.hpp"
#include "mfa/model.hpp"
#include "mfa/vocabulary.hpp"

namespace mfa {

/// A video ready for training or decoding.
struct VideoExample {
  std::string id;
  FeatureSet features;
  std::vector<std::string> attribute_tokens;
  std::vector<std::vector<TokenId>> captions;  // BOS ... EOS
  std::vector<Tokens> references;              // tokenized caption strings
};

struct RawVideo {
  ManifestEntry entry;
  std::vector<Vec> temporal;
  std::vector<Vec> motion;
};

struct Dataset {
  Vocabulary vocab;
  std::vector<VideoExample> train;
  std::vector<VideoExample> validation;
  std::vector<VideoExample> test;

  std::vector<VideoExample>& split(Split s);
  const std::vector<VideoExample>& split(Split s) const;
};

/// Vocabulary from training-split captions plus the attributes of every video.
Vocabulary vocab_for(const std::vector<RawVideo>& videos, std::size_t min_count);

VideoExample make_example(const RawVideo& video, const Vocabulary& vocab);

Dataset build_dataset(const std::vector<RawVideo>& videos, std::size_t min_count = 1);
/// As build_dataset, but with a fixed vocabulary (e.g. the one stored next to a checkpoint).
Dataset build_dataset(const std::vector<RawVideo>& videos, const Vocabulary& vocab);

/// Reads the manifest and every referenced feature file. root defaults to the manifest's directory.
std::vector<RawVideo> load_raw_videos(const std::string& manifest_path, const std::string& root = "");

/// Replaces each video's attribute tokens (and ids).
void set_attributes(VideoExample& video, const std::vector<std::string>& tokens, const Vocabulary& vocab);
void clear_attributes(std::vector<VideoExample>& videos);

}  // namespace mfa
