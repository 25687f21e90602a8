#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "mfa/errors.hpp"
#include "mfa/metrics.hpp"
#include "mfa/numerics.hpp"
#include "oracles.hpp"

using namespace mfa;

namespace {

using OracleCorpus = std::vector<std::pair<oracle::Toks, std::vector<oracle::Toks>>>;

OracleCorpus to_oracle(const TokenizedCorpus& c) {
  OracleCorpus o;
  for (const auto& r : c) o.emplace_back(r.candidate, r.references);
  return o;
}

TokenizedCorpus single(const std::string& cand, const std::vector<std::string>& refs) {
  return tokenize_corpus(Corpus{{"v", cand, refs}});
}

double oracle_mean_max(const TokenizedCorpus& c, double (*pair)(const oracle::Toks&, const oracle::Toks&)) {
  double sum = 0;
  for (const auto& r : c) {
    double best = 0;
    for (const auto& ref : r.references) best = std::max(best, pair(r.candidate, ref));
    sum += best;
  }
  return sum / static_cast<double>(c.size());
}

TokenizedCorpus random_corpus(Rng& rng, std::size_t videos, std::size_t words) {
  TokenizedCorpus c;
  auto sentence = [&](std::size_t len) {
    Tokens t;
    for (std::size_t i = 0; i < len; ++i) t.push_back("w" + std::to_string(rng.uniform_int(words)));
    return t;
  };
  for (std::size_t v = 0; v < videos; ++v) {
    TokenizedRecord r;
    r.candidate = sentence(3 + rng.uniform_int(5));
    const std::size_t nref = 1 + rng.uniform_int(3);
    for (std::size_t k = 0; k < nref; ++k) r.references.push_back(sentence(3 + rng.uniform_int(6)));
    c.push_back(r);
  }
  return c;
}

std::string data_path(const char* name) { return std::string(MFA_TEST_DATA) + "/" + name; }

}  // namespace

TEST(Tokenize, LowercasesStripsPunctuationKeepsInnerApostrophes) {
  EXPECT_EQ(tokenize("A man isn't Playing, the guitar!"),
            (Tokens{"a", "man", "isn't", "playing", "the", "guitar"}));
  EXPECT_EQ(tokenize("'quoted' rock'n'roll -- x-ray"), (Tokens{"quoted", "rock'n'roll", "x", "ray"}));
  EXPECT_EQ(tokenize("  \t\n "), Tokens{});
  EXPECT_EQ(tokenize("caf\xc3\xa9 NOIR"), (Tokens{"caf\xc3\xa9", "noir"}));
}

TEST(Tokenize, IsIdempotent) {
  for (const char* s : {"A man isn't Playing, the guitar!", "'quoted' rock'n'roll -- x-ray", "x''y 'a' b'"}) {
    const Tokens once = tokenize(s);
    EXPECT_EQ(tokenize(join_tokens(once)), once) << s;
  }
}

TEST(Bleu, IdenticalCandidateScoresOne) {
  const auto c = single("the cat is on the mat", {"the cat is on the mat"});
  for (int n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(bleu(c, n), 1.0);
}

TEST(Bleu, ClippedUnigramPrecision) {
  const auto c = single("the the the the the the the", {"the cat is on the mat"});
  EXPECT_DOUBLE_EQ(modified_precision(c, 1), 2.0 / 7.0);
  EXPECT_DOUBLE_EQ(bleu(c, 1), 2.0 / 7.0);  // longer than the reference: no brevity penalty
}

TEST(Bleu, BrevityPenaltyUsesClosestReference) {
  const auto c = single("the cat", {"the cat is on the mat", "the cat sat"});
  EXPECT_NEAR(bleu(c, 1), std::exp(1.0 - 3.0 / 2.0), 1e-15);
  const auto longer = single("the cat is on the mat today", {"the cat is on the mat"});
  EXPECT_NEAR(bleu(longer, 1), 6.0 / 7.0, 1e-15);
}

TEST(Bleu, ZeroWhenHigherOrderHasNoMatch) {
  const auto c = single("cat the", {"the cat"});
  EXPECT_DOUBLE_EQ(bleu(c, 1), 1.0);
  EXPECT_DOUBLE_EQ(bleu(c, 2), 0.0);
  EXPECT_TRUE(std::isfinite(bleu(single("a", {"a b"}), 4)));
}

TEST(Bleu, MatchesOracleAndIsNonIncreasingInN) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_corpus(rng, 1 + rng.uniform_int(6), 4);
    const auto o = to_oracle(c);
    const auto all = bleu_all(c);
    for (int n = 1; n <= 4; ++n) {
      EXPECT_NEAR(all[n - 1], oracle::bleu(o, n), 1e-12);
      EXPECT_NEAR(bleu(c, n), all[n - 1], 1e-15);
    }
    const auto parts = oracle::bleu_parts(o);
    for (int n = 2; n <= 4; ++n) {
      if (parts.matched[n - 1] > 0) {
        EXPECT_LE(all[n - 1], all[n - 2] + 1e-15);
      }
    }
  }
}

TEST(Bleu, Errors) {
  EXPECT_THROW(bleu(TokenizedCorpus{}, 1), DomainError);
  EXPECT_THROW(bleu(single("a", {"a"}), 5), DomainError);
  EXPECT_THROW(tokenize_corpus(Corpus{{"v", "a", {}}}), DomainError);
}

TEST(Rouge, LcsExample) {
  const Tokens a{"a", "b", "c", "d"}, b{"a", "c", "b", "d"};
  EXPECT_EQ(lcs_length(a, b), 3u);
  EXPECT_NEAR(rouge_l_pair(a, b), 0.75, 1e-15);
  EXPECT_DOUBLE_EQ(rouge_l_pair(a, a), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l_pair(a, Tokens{"x", "y"}), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l_pair(Tokens{}, a), 0.0);
}

TEST(Rouge, MatchesOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_corpus(rng, 1 + rng.uniform_int(5), 5);
    EXPECT_NEAR(rouge_l(c), oracle_mean_max(c, oracle::rouge_pair), 1e-12);
    for (const auto& r : c) {
      EXPECT_EQ(lcs_length(r.candidate, r.references[0]),
                static_cast<std::size_t>(oracle::lcs(r.candidate, r.references[0])));
    }
  }
}

TEST(Cider, ThreeVideoToyTable) {
  // idf(a) = log(3/3) = 0; every other unigram has idf log 3.
  const TokenizedCorpus c{
      {{"a", "x"}, {{"a", "x"}}},
      {{"a", "y"}, {{"a", "z"}}},
      {{"a"}, {{"a", "w"}}},
  };
  // video 1: unigrams and bigrams identical → cosine 1 for n = 1, 2; no 3/4-grams
  // video 2: candidate (a:0, y:log 3), reference (a:0, z:log 3) → cosine 0
  // video 3: candidate (a:0) has zero norm → 0
  EXPECT_NEAR(cider(c), 10.0 * (2.0 / 4.0) / 3.0, 1e-12);
  EXPECT_NEAR(cider(c), oracle::cider(to_oracle(c)), 1e-12);
}

TEST(Cider, ExactUniqueCaptionsHitOnePerOrder) {
  const TokenizedCorpus c{
      {{"a", "b", "c", "d"}, {{"a", "b", "c", "d"}}},
      {{"e", "f", "g", "h"}, {{"e", "f", "g", "h"}}},
  };
  EXPECT_NEAR(cider(c), 10.0, 1e-12);
  const TokenizedCorpus none{
      {{"p", "q"}, {{"a", "b"}}},
      {{"r"}, {{"e", "f"}}},
  };
  EXPECT_DOUBLE_EQ(cider(none), 0.0);
}

TEST(Cider, MatchesOracleAndNeedsTwoVideos) {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = random_corpus(rng, 2 + rng.uniform_int(5), 6);
    EXPECT_NEAR(cider(c), oracle::cider(to_oracle(c)), 1e-9);
  }
  try {
    cider(single("a b", {"a b"}));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("idf"), std::string::npos);
  }
}

TEST(Meteor, IdenticalPairClosedForm) {
  for (std::size_t m = 1; m <= 6; ++m) {
    Tokens t;
    for (std::size_t i = 0; i < m; ++i) t.push_back("w" + std::to_string(i));
    const auto a = meteor_align(t, t);
    EXPECT_EQ(a.matches, m);
    EXPECT_EQ(a.chunks, 1u);
    EXPECT_NEAR(meteor_pair(t, t), 1.0 - 0.5 / std::pow(static_cast<double>(m), 3), 1e-15);
  }
}

TEST(Meteor, ReversedDistinctWordsHalvesFmean) {
  const Tokens t{"a", "b", "c", "d", "e"};
  const Tokens r(t.rbegin(), t.rend());
  const auto a = meteor_align(t, r);
  EXPECT_EQ(a.matches, 5u);
  EXPECT_EQ(a.chunks, 5u);
  EXPECT_NEAR(meteor_pair(t, r), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(meteor_pair(t, Tokens{"x"}), 0.0);
}

TEST(Meteor, AlignmentMatchesBruteForce) {
  Rng rng(14);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_corpus(rng, 1, 3);
    const auto& cand = c[0].candidate;
    for (const auto& ref : c[0].references) {
      const auto a = meteor_align(cand, ref);
      const auto [m, ch] = oracle::meteor_alignment(cand, ref);
      EXPECT_EQ(a.matches, static_cast<std::size_t>(m));
      EXPECT_EQ(a.chunks, static_cast<std::size_t>(ch));
      EXPECT_NEAR(meteor_pair(cand, ref), oracle::meteor_pair(cand, ref), 1e-15);
    }
  }
}

TEST(Meteor, CorpusIsMeanOfBestReference) {
  Rng rng(15);
  const auto c = random_corpus(rng, 6, 4);
  EXPECT_NEAR(meteor_lite(c), oracle_mean_max(c, oracle::meteor_pair), 1e-12);
}

TEST(Evaluate, PerfectCandidatesHitMaxima) {
  const Corpus c{{"a", "The dog runs.", {"the dog runs", "a cat"}}, {"b", "A bird sings loudly", {"a bird sings loudly"}}};
  const ScoreReport r = evaluate(c);
  for (double b : r.bleu) EXPECT_DOUBLE_EQ(b, 1.0);
  EXPECT_DOUBLE_EQ(r.rouge_l, 1.0);
  EXPECT_NEAR(r.meteor_lite, oracle_mean_max(tokenize_corpus(c), oracle::meteor_pair), 1e-15);
  EXPECT_NEAR(r.cider, oracle::cider(to_oracle(tokenize_corpus(c))), 1e-12);
}

TEST(Evaluate, OrderInvariant) {
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    Corpus c;
    const auto t = random_corpus(rng, 5, 5);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CorpusRecord r{"v" + std::to_string(i), join_tokens(t[i].candidate), {}};
      for (const auto& ref : t[i].references) r.references.push_back(join_tokens(ref));
      c.push_back(r);
    }
    Corpus p = c;
    rng.shuffle(p);
    EXPECT_EQ(evaluate(c).to_text(), evaluate(p).to_text());
    const ScoreReport a = evaluate(c), b = evaluate(p);
    for (auto key : kMetricKeys) EXPECT_EQ(a.get(key), b.get(key));
  }
}

TEST(Evaluate, LenientReportsZeroCiderForOneVideo) {
  const auto c = single("a b", {"a b"});
  EXPECT_THROW(evaluate(c), DomainError);
  EXPECT_DOUBLE_EQ(evaluate_lenient(c).cider, 0.0);
  EXPECT_DOUBLE_EQ(evaluate_lenient(c).bleu[0], 1.0);
}

TEST(Evaluate, ReportTextRoundTrips) {
  ScoreReport r;
  r.bleu = {0.5, 0.25, 0.125, 0.0625};
  r.meteor_lite = 0.3;
  r.cider = 1.393;
  r.rouge_l = 0.7;
  const std::string text = r.to_text();
  EXPECT_NE(text.find("\"cider\": 1.393000"), std::string::npos);
  EXPECT_EQ(ScoreReport::parse(text).to_text(), text);
  EXPECT_THROW(r.get("spice"), ConfigError);
}

TEST(Evaluate, GoldenCorpusMatchesOracleAndFrozenReport) {
  const Corpus corpus = read_corpus(data_path("golden_corpus.jsonl"));
  ASSERT_EQ(corpus.size(), 6u);
  const TokenizedCorpus t = tokenize_corpus(corpus);
  const auto o = to_oracle(t);
  const ScoreReport r = evaluate(corpus);
  for (int n = 1; n <= 4; ++n) EXPECT_NEAR(r.bleu[n - 1], oracle::bleu(o, n), 1e-12);
  EXPECT_NEAR(r.rouge_l, oracle_mean_max(t, oracle::rouge_pair), 1e-12);
  EXPECT_NEAR(r.meteor_lite, oracle_mean_max(t, oracle::meteor_pair), 1e-12);
  EXPECT_NEAR(r.cider, oracle::cider(o), 1e-12);

  std::ifstream in(data_path("golden_report.json"));
  const std::string frozen(std::istreambuf_iterator<char>(in), {});
  EXPECT_EQ(r.to_text(), frozen);
}

TEST(CorpusFile, WriteReadRoundTrip) {
  const Corpus c{{"x1", "a \"quoted\" caption", {"ref one", "ref two"}}, {"x2", "", {"r"}}};
  const std::string path = testing::TempDir() + "mfa_corpus.jsonl";
  write_corpus(path, c);
  const Corpus back = read_corpus(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].candidate, c[0].candidate);
  EXPECT_EQ(back[0].references, c[0].references);
  EXPECT_EQ(back[1].id, "x2");
  std::ofstream(path) << "{\"id\": \"x\", \"candidate\": \"a\"}\n";
  EXPECT_THROW(read_corpus(path), FormatError);
}
