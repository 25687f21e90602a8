#include "mfa/dataset.hpp"

#include <filesystem>

#include "mfa/errors.hpp"
#include "mfa/features.hpp"

namespace mfa {

std::vector<VideoExample>& Dataset::split(Split s) {
  switch (s) {
    case Split::train:
      return train;
    case Split::validation:
      return validation;
    case Split::test:
      return test;
  }
  return train;
}

const std::vector<VideoExample>& Dataset::split(Split s) const {
  return const_cast<Dataset*>(this)->split(s);
}

Vocabulary vocab_for(const std::vector<RawVideo>& videos, std::size_t min_count) {
  std::vector<std::string> captions;
  std::vector<std::string> attributes;
  for (const auto& v : videos) {
    if (v.entry.split == Split::train) {
      captions.insert(captions.end(), v.entry.captions.begin(), v.entry.captions.end());
    }
    for (const auto& a : v.entry.attributes) {
      for (const auto& t : tokenize(a)) attributes.push_back(t);
    }
  }
  if (captions.empty()) throw ConfigError("vocabulary: the training split has no captions");
  return build_vocab(captions, attributes, min_count);
}

void set_attributes(VideoExample& video, const std::vector<std::string>& tokens,
                    const Vocabulary& vocab) {
  video.attribute_tokens.clear();
  video.features.attributes.clear();
  for (const auto& a : tokens) {
    for (const auto& t : tokenize(a)) {
      video.attribute_tokens.push_back(t);
      video.features.attributes.push_back(vocab.encode_token(t));
    }
  }
}

void clear_attributes(std::vector<VideoExample>& videos) {
  for (auto& v : videos) {
    v.attribute_tokens.clear();
    v.features.attributes.clear();
  }
}

VideoExample make_example(const RawVideo& video, const Vocabulary& vocab) {
  VideoExample ex;
  ex.id = video.entry.id;
  ex.features.temporal = video.temporal;
  ex.features.motion = video.motion;
  set_attributes(ex, video.entry.attributes, vocab);
  for (const auto& c : video.entry.captions) {
    ex.captions.push_back(vocab.encode_caption(c));
    ex.references.push_back(tokenize(c));
  }
  return ex;
}

Dataset build_dataset(const std::vector<RawVideo>& videos, const Vocabulary& vocab) {
  Dataset ds;
  ds.vocab = vocab;
  for (const auto& v : videos) ds.split(v.entry.split).push_back(make_example(v, ds.vocab));
  return ds;
}

Dataset build_dataset(const std::vector<RawVideo>& videos, std::size_t min_count) {
  return build_dataset(videos, vocab_for(videos, min_count));
}

std::vector<RawVideo> load_raw_videos(const std::string& manifest_path, const std::string& root) {
  namespace fs = std::filesystem;
  const Manifest m = Manifest::load(manifest_path);
  const std::string base = root.empty() ? fs::path(manifest_path).parent_path().string() : root;
  m.check_files(base);
  std::vector<RawVideo> out;
  out.reserve(m.videos.size());
  for (const auto& e : m.videos) {
    RawVideo v;
    v.entry = e;
    v.temporal = read_features((fs::path(base) / e.temporal_path).string());
    v.motion = read_features((fs::path(base) / e.motion_path).string());
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace mfa
