#include "mfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "mfa/errors.hpp"

namespace mfa {

namespace {

bool is_ascii_alnum(unsigned char ch) {
  return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
}

using NgramCounts = std::map<Tokens, int>;

NgramCounts count_ngrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  const auto len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) {
    counts[Tokens(tokens.begin() + i, tokens.begin() + i + n)] += 1;
  }
  return counts;
}

// Sorting before summing makes corpus means independent of record order.
double ordered_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

void require_nonempty(const TokenizedCorpus& corpus, const char* what) {
  if (corpus.empty()) throw DomainError(std::string(what) + ": empty corpus");
  for (const auto& r : corpus) {
    if (r.references.empty()) throw DomainError(std::string(what) + ": record without references");
  }
}

struct BleuStats {
  std::array<long, 4> matches{};
  std::array<long, 4> totals{};
  long cand_len = 0;
  long ref_len = 0;
};

BleuStats bleu_stats(const TokenizedCorpus& corpus) {
  BleuStats s;
  for (const auto& rec : corpus) {
    const long c = static_cast<long>(rec.candidate.size());
    s.cand_len += c;
    long best = -1;
    for (const auto& ref : rec.references) {
      const long r = static_cast<long>(ref.size());
      if (best < 0 || std::labs(r - c) < std::labs(best - c) ||
          (std::labs(r - c) == std::labs(best - c) && r < best)) {
        best = r;
      }
    }
    s.ref_len += best;
    for (int n = 1; n <= 4; ++n) {
      const NgramCounts cand = count_ngrams(rec.candidate, n);
      NgramCounts max_ref;
      for (const auto& ref : rec.references) {
        for (const auto& [g, cnt] : count_ngrams(ref, n)) {
          auto& m = max_ref[g];
          m = std::max(m, cnt);
        }
      }
      for (const auto& [g, cnt] : cand) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) s.matches[n - 1] += std::min(cnt, it->second);
        s.totals[n - 1] += cnt;
      }
    }
  }
  return s;
}

double bleu_from_stats(const BleuStats& s, int n) {
  if (s.cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (s.matches[k] == 0 || s.totals[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(s.matches[k]) / static_cast<double>(s.totals[k]));
  }
  const double bp =
      std::exp(std::min(0.0, 1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.cand_len)));
  return bp * std::exp(log_sum / n);
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto ch = static_cast<unsigned char>(text[i]);
    if (ch >= 0x80) {
      cur.push_back(static_cast<char>(ch));
    } else if (is_ascii_alnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (ch == '\'' && i > 0 && i + 1 < text.size() &&
               is_ascii_alnum(static_cast<unsigned char>(text[i - 1])) &&
               is_ascii_alnum(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

TokenizedCorpus tokenize_corpus(const Corpus& corpus) {
  TokenizedCorpus out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    if (r.references.empty()) throw DomainError("corpus record '" + r.id + "' has no references");
    TokenizedRecord t;
    t.candidate = tokenize(r.candidate);
    for (const auto& ref : r.references) t.references.push_back(tokenize(ref));
    out.push_back(std::move(t));
  }
  return out;
}

double modified_precision(const TokenizedCorpus& corpus, int n) {
  if (n < 1 || n > 4) throw DomainError("modified_precision: n must be in 1..4");
  require_nonempty(corpus, "modified_precision");
  const BleuStats s = bleu_stats(corpus);
  if (s.totals[n - 1] == 0) return 0.0;
  return static_cast<double>(s.matches[n - 1]) / static_cast<double>(s.totals[n - 1]);
}

double bleu(const TokenizedCorpus& corpus, int n) {
  if (n < 1 || n > 4) throw DomainError("bleu: n must be in 1..4");
  require_nonempty(corpus, "bleu");
  return bleu_from_stats(bleu_stats(corpus), n);
}

std::array<double, 4> bleu_all(const TokenizedCorpus& corpus) {
  require_nonempty(corpus, "bleu");
  const BleuStats s = bleu_stats(corpus);
  return {bleu_from_stats(s, 1), bleu_from_stats(s, 2), bleu_from_stats(s, 3),
          bleu_from_stats(s, 4)};
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_pair(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double rouge_l(const TokenizedCorpus& corpus) {
  require_nonempty(corpus, "rouge_l");
  std::vector<double> scores;
  for (const auto& rec : corpus) {
    double best = 0.0;
    for (const auto& ref : rec.references) best = std::max(best, rouge_l_pair(rec.candidate, ref));
    scores.push_back(best);
  }
  return ordered_mean(std::move(scores));
}

double cider(const TokenizedCorpus& corpus) {
  require_nonempty(corpus, "cider");
  if (corpus.size() < 2) {
    throw DomainError("cider: idf needs a population of at least 2 videos, got " +
                      std::to_string(corpus.size()));
  }
  const double log_n = std::log(static_cast<double>(corpus.size()));

  using Vector = std::map<Tokens, double>;
  auto cosine = [](const Vector& a, const Vector& b) {
    double na = 0.0, nb = 0.0, d = 0.0;
    for (const auto& [g, v] : a) na += v * v;
    for (const auto& [g, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    for (const auto& [g, v] : a) {
      auto it = b.find(g);
      if (it != b.end()) d += v * it->second;
    }
    return d / (std::sqrt(na) * std::sqrt(nb));
  };

  std::vector<double> per_video(corpus.size(), 0.0);
  for (int n = 1; n <= 4; ++n) {
    std::map<Tokens, int> df;
    for (const auto& rec : corpus) {
      std::map<Tokens, bool> seen;
      for (const auto& ref : rec.references)
        for (const auto& [g, c] : count_ngrams(ref, n)) seen[g] = true;
      for (const auto& [g, b] : seen) df[g] += 1;
    }
    auto tfidf = [&](const Tokens& toks) {
      Vector v;
      for (const auto& [g, c] : count_ngrams(toks, n)) {
        auto it = df.find(g);
        const double d = it == df.end() ? 1.0 : static_cast<double>(it->second);
        v[g] = static_cast<double>(c) * (log_n - std::log(std::max(1.0, d)));
      }
      return v;
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Vector vc = tfidf(corpus[i].candidate);
      double sum = 0.0;
      for (const auto& ref : corpus[i].references) sum += cosine(vc, tfidf(ref));
      per_video[i] += sum / static_cast<double>(corpus[i].references.size()) / 4.0;
    }
  }
  for (double& v : per_video) v *= 10.0;
  return ordered_mean(std::move(per_video));
}

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  std::unordered_map<std::string, int> ids;
  auto id_of = [&ids](const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<int>(ids.size()));
    return it->second;
  };
  std::vector<int> c, r;
  for (const auto& w : candidate) c.push_back(id_of(w));
  for (const auto& w : reference) r.push_back(id_of(w));
  const std::size_t nw = ids.size();

  std::vector<int> cnt_c(nw, 0), cnt_r(nw, 0);
  for (int w : c) ++cnt_c[static_cast<std::size_t>(w)];
  for (int w : r) ++cnt_r[static_cast<std::size_t>(w)];
  std::vector<int> quota(nw);
  std::size_t matches = 0;
  for (std::size_t w = 0; w < nw; ++w) {
    quota[w] = std::min(cnt_c[w], cnt_r[w]);
    matches += static_cast<std::size_t>(quota[w]);
  }
  if (matches == 0) return {};

  std::vector<std::vector<std::size_t>> positions(nw);
  for (std::size_t j = 0; j < r.size(); ++j) positions[static_cast<std::size_t>(r[j])].push_back(j);

  // remaining_c[i][w]: occurrences of w in c[i..]; computed on the fly via a running count.
  std::vector<int> left_c = cnt_c;
  std::vector<bool> used(r.size(), false);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  long budget = 2'000'000;  // node cap; beyond it the best alignment found so far is kept

  auto dfs = [&](auto&& self, std::size_t i, long prev_ref, std::size_t chunks) -> void {
    if (chunks >= best || budget-- <= 0) return;
    if (i == c.size()) {
      best = chunks;
      return;
    }
    const auto w = static_cast<std::size_t>(c[i]);
    --left_c[w];
    if (quota[w] > 0) {
      // Continuing the current chunk first tightens the bound early.
      const long next = prev_ref + 1;
      if (prev_ref >= 0 && static_cast<std::size_t>(next) < r.size() &&
          !used[static_cast<std::size_t>(next)] && r[static_cast<std::size_t>(next)] == c[i]) {
        used[static_cast<std::size_t>(next)] = true;
        --quota[w];
        self(self, i + 1, next, chunks);
        ++quota[w];
        used[static_cast<std::size_t>(next)] = false;
      }
      for (std::size_t j : positions[w]) {
        if (used[j] || (prev_ref >= 0 && static_cast<long>(j) == next)) continue;
        used[j] = true;
        --quota[w];
        self(self, i + 1, static_cast<long>(j), chunks + 1);
        ++quota[w];
        used[j] = false;
      }
    }
    if (left_c[w] >= quota[w]) self(self, i + 1, -1, chunks);
    ++left_c[w];
  };
  dfs(dfs, 0, -1, 0);
  return {matches, best};
}

double meteor_pair(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const MeteorAlignment a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

double meteor_lite(const TokenizedCorpus& corpus) {
  require_nonempty(corpus, "meteor_lite");
  std::vector<double> scores;
  for (const auto& rec : corpus) {
    double best = 0.0;
    for (const auto& ref : rec.references) best = std::max(best, meteor_pair(rec.candidate, ref));
    scores.push_back(best);
  }
  return ordered_mean(std::move(scores));
}

double ScoreReport::get(std::string_view key) const {
  if (key == "bleu1") return bleu[0];
  if (key == "bleu2") return bleu[1];
  if (key == "bleu3") return bleu[2];
  if (key == "bleu4") return bleu[3];
  if (key == "meteor_lite" || key == "meteor") return meteor_lite;
  if (key == "cider") return cider;
  if (key == "rouge_l" || key == "rouge") return rouge_l;
  throw ConfigError("unknown metric '" + std::string(key) + "'");
}

std::string ScoreReport::to_text() const {
  std::string s = "{\n";
  for (std::size_t i = 0; i < kMetricKeys.size(); ++i) {
    s += "  \"" + std::string(kMetricKeys[i]) + "\": " + fmt6(get(kMetricKeys[i]));
    s += i + 1 < kMetricKeys.size() ? ",\n" : "\n";
  }
  s += "}\n";
  return s;
}

ScoreReport ScoreReport::parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("score report: ") + e.what());
  }
  ScoreReport r;
  try {
    for (int k = 0; k < 4; ++k) r.bleu[static_cast<std::size_t>(k)] = j.at("bleu" + std::to_string(k + 1)).get<double>();
    r.meteor_lite = j.at("meteor_lite").get<double>();
    r.cider = j.at("cider").get<double>();
    r.rouge_l = j.at("rouge_l").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("score report: ") + e.what());
  }
  return r;
}

namespace {

ScoreReport evaluate_sorted(const TokenizedCorpus& corpus, bool strict) {
  require_nonempty(corpus, "evaluate");
  TokenizedCorpus sorted = corpus;
  std::sort(sorted.begin(), sorted.end(), [](const TokenizedRecord& a, const TokenizedRecord& b) {
    return std::tie(a.candidate, a.references) < std::tie(b.candidate, b.references);
  });
  ScoreReport r;
  r.bleu = bleu_all(sorted);
  r.meteor_lite = meteor_lite(sorted);
  r.rouge_l = rouge_l(sorted);
  r.cider = (strict || sorted.size() >= 2) ? cider(sorted) : 0.0;
  return r;
}

}  // namespace

ScoreReport evaluate(const TokenizedCorpus& corpus) { return evaluate_sorted(corpus, true); }

ScoreReport evaluate_lenient(const TokenizedCorpus& corpus) { return evaluate_sorted(corpus, false); }

ScoreReport evaluate(const Corpus& corpus) { return evaluate(tokenize_corpus(corpus)); }

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus file '" + path + "'");
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CorpusRecord r;
      r.id = j.at("id").get<std::string>();
      r.candidate = j.at("candidate").get<std::string>();
      r.references = j.at("references").get<std::vector<std::string>>();
      corpus.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus file '" + path + "'");
  for (const auto& r : corpus) {
    nlohmann::json j;
    j["id"] = r.id;
    j["candidate"] = r.candidate;
    j["references"] = r.references;
    out << j.dump() << '\n';
  }
}

}  // namespace mfa
