#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfa/dataset.hpp"

namespace mfa {

/// Synthetic captioning benchmark. Every video has a latent (subject, verb) pair: temporal
/// frames are noisy samples around a subject centroid, motion clips around a verb centroid,
/// and each caption is "a <subject> is <verb> <prep> the <place>" where the place phrase is
/// fixed per verb. A per-video offset shared by all frames keeps visual identification
/// imperfect, so ground-truth attributes carry extra signal.
struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t n_videos = 50;
  /// Approximate vocabulary size (reserved tokens included); sets the subject/verb counts.
  std::size_t vocab_size = 60;
  std::size_t temporal_dim = 16;
  std::size_t motion_dim = 16;
  std::size_t min_frames = 6;
  std::size_t max_frames = 10;
  std::size_t min_clips = 2;
  std::size_t max_clips = 4;
  // per-video offset scales, relative to unit centroid spread
  double temporal_noise = 0.5;
  double motion_noise = 0.5;
  double frame_noise = 0.3;  // per-frame jitter
  std::size_t captions_per_video = 1;
  /// Attributes are the ground-truth (subject, verb) tokens; otherwise left empty.
  bool hq_attributes = true;
};

struct SynthLatent {
  std::string subject;
  std::string verb;
};

struct SynthDataset {
  std::vector<RawVideo> videos;  // manifest entries carry relative feature paths
  std::vector<SynthLatent> latents;
  std::vector<std::string> subjects;
  std::vector<std::string> verbs;

  Manifest manifest() const;
};

/// Splits: validation = test = max(1, n/10), train = the rest (n >= 3).
SynthDataset synth_dataset(const SynthOptions& options);

/// Writes manifest.json and features/<id>.{temporal,motion}.mfaf under root.
void write_dataset(const std::vector<RawVideo>& videos, const std::string& root);

}  // namespace mfa
