#pragma once

#include <vector>

#include "mfa/model.hpp"
#include "mfa/training.hpp"

namespace fixtures {

/// Every parameter drawn from N(0, scale²); importance vectors and biases included so that
/// no path is trivially pass-through.
inline mfa::ModelParams random_params(const mfa::Dims& d, mfa::Rng& rng, double scale = 0.5) {
  mfa::ModelParams p = mfa::ModelParams::zeros(d);
  p.for_each_block([&](std::string_view, mfa::Mat& m, mfa::BlockKind) {
    for (double& x : m.flat()) x = scale * rng.normal();
  });
  return p;
}

inline std::vector<mfa::Vec> random_vectors(std::size_t n, std::size_t dim, mfa::Rng& rng) {
  std::vector<mfa::Vec> out(n, mfa::Vec(dim));
  for (auto& v : out) {
    for (double& x : v) x = rng.normal();
  }
  return out;
}

/// V=5, d_e=d_h=3, d_v=d_f=2.
inline mfa::Dims tiny_dims() { return mfa::Dims{5, 3, 3, 2, 2}; }

struct Instance {
  mfa::ModelConfig config;
  mfa::ModelParams params;
  mfa::FeatureSet features;
  std::vector<mfa::TokenId> caption;
};

/// Tiny model with all branches active, 3 frames, 2 clips, 2 attributes, caption of 4 tokens.
inline Instance tiny_instance(std::uint64_t seed) {
  mfa::Rng rng(seed);
  Instance in;
  in.config.dims = tiny_dims();
  in.params = random_params(in.config.dims, rng);
  in.features.temporal = random_vectors(3, 2, rng);
  in.features.motion = random_vectors(2, 2, rng);
  in.features.attributes = {4, 3};
  in.caption = {mfa::kBos, 4, 3, mfa::kEos};
  return in;
}

}  // namespace fixtures

#include "mfa/dataset.hpp"
#include "mfa/synth.hpp"

namespace fixtures {

/// Small synthetic dataset already split and encoded.
inline mfa::Dataset synth_small(std::uint64_t seed, std::size_t n_videos = 30, std::size_t vocab = 23) {
  mfa::SynthOptions o;
  o.seed = seed;
  o.n_videos = n_videos;
  o.vocab_size = vocab;
  o.temporal_dim = 4;
  o.motion_dim = 4;
  o.min_frames = 2;
  o.max_frames = 3;
  o.min_clips = 1;
  o.max_clips = 2;
  return mfa::build_dataset(mfa::synth_dataset(o).videos, std::size_t{1});
}

inline mfa::TrainConfig small_config(const mfa::Dataset& ds, std::size_t width = 8) {
  mfa::TrainConfig c;
  c.model.dims = {ds.vocab.size(), width, width, ds.train.front().features.temporal.front().size(),
                  ds.train.front().features.motion.front().size()};
  c.learning_rate = 1e-2;
  c.dropout = 0.0;
  c.batch_size = 4;
  c.max_epochs = 5;
  c.patience = 5;
  c.beam_size = 2;
  c.max_len = 12;
  return c;
}

}  // namespace fixtures
