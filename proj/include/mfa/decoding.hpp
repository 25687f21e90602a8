#pragma once

#include <vector>

#include "mfa/model.hpp"

namespace mfa {

struct BeamOptions {
  std::size_t beam_size = 5;
  /// Maximum number of generated tokens, EOS included.
  std::size_t max_len = 30;
  /// Final ranking uses log p / len^alpha; 0 ranks by raw cumulative log-probability.
  double length_penalty = 0.0;
};

struct BeamResult {
  std::vector<TokenId> tokens;  // caption without BOS/EOS
  double log_prob = 0.0;        // cumulative log-probability, EOS included when finished
  bool finished = false;        // false: max_len reached before any hypothesis emitted EOS
};

/// Beam search from BOS. Candidates are ranked by (score desc, token id asc, parent rank asc).
BeamResult beam_search(const FeatureSet& features, const ModelParams& params,
                       const ModelConfig& config, const BeamOptions& options = {});

BeamResult greedy_decode(const FeatureSet& features, const ModelParams& params,
                         const ModelConfig& config, std::size_t max_len = 30);

}  // namespace mfa
