#include "mfa/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "mfa/errors.hpp"

namespace mfa {

EmbeddingCoverage load_embeddings(const std::string& path, const Vocabulary& vocab, Mat& embedding) {
  if (embedding.rows() != vocab.size()) {
    throw ShapeError("load_embeddings: embedding has " + std::to_string(embedding.rows()) +
                     " rows for a vocabulary of " + std::to_string(vocab.size()));
  }
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file '" + path + "'");
  const std::size_t dim = embedding.cols();
  std::vector<bool> seen(vocab.size(), false);
  EmbeddingCoverage cov;
  cov.total = vocab.size() - kNumReserved;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    Vec values;
    std::string field;
    while (ss >> field) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw FormatError(path + ": line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    if (values.size() != dim) {
      throw FormatError(path + ": line " + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    const auto id = vocab.find(token);
    if (!id || *id < kNumReserved) continue;
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw FormatError(path + ": line " + std::to_string(lineno) + ": non-finite value");
      }
    }
    std::copy(values.begin(), values.end(), embedding.row(*id).begin());
    if (!seen[*id]) {
      seen[*id] = true;
      ++cov.found;
    }
  }
  return cov;
}

}  // namespace mfa
