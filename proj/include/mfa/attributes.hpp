#pragma once

#include <string>
#include <vector>

#include "mfa/dataset.hpp"
#include "mfa/numerics.hpp"
#include "mfa/vocabulary.hpp"

namespace mfa {

struct NnPredictorOptions {
  std::size_t k = 1;      // neighbours retrieved per test frame
  std::size_t top_m = 2;  // attributes returned
  /// Vote separately for each attribute position (subject slot, verb slot, ...).
  bool per_slot = true;
  /// Fast mode: compare mean-pooled vectors instead of individual frames.
  bool mean_pooled = false;
};

/// Nearest-neighbour attribute prediction on temporal (per-frame) features. Each test frame
/// retrieves its k nearest training frames (Euclidean); every retrieved frame votes with its
/// video's attributes. Ties go to the lexicographically smaller token.
std::vector<std::string> predict_attributes_nn(const std::vector<Vec>& test_temporal,
                                               const std::vector<VideoExample>& train,
                                               const NnPredictorOptions& options = {});

/// Each attribute is replaced with probability p by a uniformly drawn non-reserved token
/// different from the original.
std::vector<TokenId> inject_noise(const std::vector<TokenId>& attributes, double p,
                                  const Vocabulary& vocab, Rng& rng);

}  // namespace mfa
