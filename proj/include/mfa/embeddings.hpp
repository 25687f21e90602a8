#pragma once

#include <string>

#include "mfa/numerics.hpp"
#include "mfa/vocabulary.hpp"

namespace mfa {

struct EmbeddingCoverage {
  std::size_t found = 0;
  std::size_t total = 0;  // non-reserved vocabulary entries
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(total); }
};

/// Reads `token v1 ... vd` lines (d = embedding.cols()) and overwrites the rows of tokens
/// present in the vocabulary; other rows keep their existing initialisation.
/// A line of the wrong width raises FormatError naming the line number.
EmbeddingCoverage load_embeddings(const std::string& path, const Vocabulary& vocab, Mat& embedding);

}  // namespace mfa
