#include "mfa/attributes.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

#include "mfa/errors.hpp"

namespace mfa {

namespace {

double squared_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw ShapeError("nearest neighbour: feature widths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " differ");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

Vec mean_of(const std::vector<Vec>& vs) {
  Vec m(vs.front().size(), 0.0);
  for (const auto& v : vs) axpy(1.0, v, m);
  for (double& x : m) x /= static_cast<double>(vs.size());
  return m;
}

struct Neighbour {
  double dist;
  std::size_t video;
  std::size_t frame;
  bool operator<(const Neighbour& o) const {
    return std::tie(dist, video, frame) < std::tie(o.dist, o.video, o.frame);
  }
};

// The k nearest (video, frame) pairs to `query`, closest first.
std::vector<Neighbour> nearest(const Vec& query, const std::vector<const std::vector<Vec>*>& pools,
                               std::size_t k) {
  std::vector<Neighbour> all;
  for (std::size_t v = 0; v < pools.size(); ++v) {
    for (std::size_t f = 0; f < pools[v]->size(); ++f) {
      all.push_back({squared_distance(query, (*pools[v])[f]), v, f});
    }
  }
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end());
  all.resize(n);
  return all;
}

// Highest count first, ties to the lexicographically smaller token.
std::vector<std::string> ranked(const std::map<std::string, std::size_t>& votes) {
  std::vector<std::pair<std::string, std::size_t>> v(votes.begin(), votes.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [tok, n] : v) out.push_back(tok);
  return out;
}

}  // namespace

std::vector<std::string> predict_attributes_nn(const std::vector<Vec>& test_temporal,
                                               const std::vector<VideoExample>& train,
                                               const NnPredictorOptions& options) {
  if (test_temporal.empty()) throw DomainError("predict_attributes_nn: test video has no temporal features");
  if (train.empty()) throw DomainError("predict_attributes_nn: training set is empty");
  if (options.k == 0) throw ConfigError("predict_attributes_nn: k must be >= 1");

  std::vector<std::vector<Vec>> pooled;
  std::vector<const std::vector<Vec>*> pools;
  std::vector<Vec> queries;
  if (options.mean_pooled) {
    for (const auto& v : train) pooled.push_back({mean_of(v.features.temporal)});
    for (const auto& p : pooled) pools.push_back(&p);
    queries.push_back(mean_of(test_temporal));
  } else {
    for (const auto& v : train) pools.push_back(&v.features.temporal);
    queries = test_temporal;
  }

  std::size_t slots = 0;
  for (const auto& v : train) slots = std::max(slots, v.attribute_tokens.size());
  std::vector<std::map<std::string, std::size_t>> slot_votes(slots);
  std::map<std::string, std::size_t> votes;

  for (const auto& q : queries) {
    for (const auto& nb : nearest(q, pools, options.k)) {
      const auto& attrs = train[nb.video].attribute_tokens;
      for (std::size_t j = 0; j < attrs.size(); ++j) {
        ++votes[attrs[j]];
        ++slot_votes[j][attrs[j]];
      }
    }
  }

  std::vector<std::string> out;
  if (options.per_slot) {
    for (std::size_t j = 0; j < slots && out.size() < options.top_m; ++j) {
      for (const auto& tok : ranked(slot_votes[j])) {
        if (std::find(out.begin(), out.end(), tok) == out.end()) {
          out.push_back(tok);
          break;
        }
      }
    }
  } else {
    for (const auto& tok : ranked(votes)) {
      if (out.size() == options.top_m) break;
      out.push_back(tok);
    }
  }
  return out;
}

std::vector<TokenId> inject_noise(const std::vector<TokenId>& attributes, double p,
                                  const Vocabulary& vocab, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("inject_noise: p must lie in [0, 1]");
  const std::size_t pool = vocab.size() - kNumReserved;
  std::vector<TokenId> out = attributes;
  for (auto& id : out) {
    if (!rng.bernoulli(p)) continue;
    const bool own = id >= kNumReserved;
    const std::size_t choices = pool - (own ? 1 : 0);
    if (choices == 0) throw DomainError("inject_noise: vocabulary has no alternative token");
    auto pick = static_cast<TokenId>(kNumReserved + rng.uniform_int(choices));
    if (own && pick >= id) ++pick;
    id = pick;
  }
  return out;
}

}  // namespace mfa
