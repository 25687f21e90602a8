#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mfa {

using Tokens = std::vector<std::string>;

/// Lowercases ASCII letters, turns punctuation into separators (an apostrophe survives only
/// between two alphanumerics), and splits on whitespace. Bytes >= 0x80 are kept verbatim.
Tokens tokenize(std::string_view text);
std::string join_tokens(const Tokens& tokens);

struct CorpusRecord {
  std::string id;
  std::string candidate;
  std::vector<std::string> references;
};
using Corpus = std::vector<CorpusRecord>;

struct TokenizedRecord {
  Tokens candidate;
  std::vector<Tokens> references;
};
using TokenizedCorpus = std::vector<TokenizedRecord>;

/// Tokenizes every record; throws DomainError if a record has no references.
TokenizedCorpus tokenize_corpus(const Corpus& corpus);

/// Corpus BLEU-n (no smoothing), closest reference length for the brevity penalty.
double bleu(const TokenizedCorpus& corpus, int n);
std::array<double, 4> bleu_all(const TokenizedCorpus& corpus);

/// Modified (clipped) n-gram precision over the whole corpus.
double modified_precision(const TokenizedCorpus& corpus, int n);

inline constexpr double kRougeBeta = 1.2;
std::size_t lcs_length(const Tokens& a, const Tokens& b);
double rouge_l_pair(const Tokens& candidate, const Tokens& reference);
double rouge_l(const TokenizedCorpus& corpus);

/// Plain CIDEr (no length penalty, no clipping), ×10.
double cider(const TokenizedCorpus& corpus);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};
/// Exact-match unigram alignment with maximal matches and, among those, fewest chunks.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);
double meteor_pair(const Tokens& candidate, const Tokens& reference);
double meteor_lite(const TokenizedCorpus& corpus);

struct ScoreReport {
  std::array<double, 4> bleu{};
  double meteor_lite = 0.0;
  double cider = 0.0;
  double rouge_l = 0.0;

  /// Keys: bleu1..bleu4, meteor_lite, cider, rouge_l.
  double get(std::string_view key) const;
  /// JSON object with fixed key order and 6 decimal places.
  std::string to_text() const;
  static ScoreReport parse(const std::string& text);
};

inline constexpr std::array<std::string_view, 7> kMetricKeys = {
    "bleu1", "bleu2", "bleu3", "bleu4", "meteor_lite", "cider", "rouge_l"};

ScoreReport evaluate(const Corpus& corpus);
ScoreReport evaluate(const TokenizedCorpus& corpus);
/// As evaluate, but a single-video corpus reports CIDEr as 0 instead of throwing.
ScoreReport evaluate_lenient(const TokenizedCorpus& corpus);

/// Corpus files: one JSON object per line {"id", "candidate", "references": [...]}.
Corpus read_corpus(const std::string& path);
void write_corpus(const std::string& path, const Corpus& corpus);

}  // namespace mfa
