#include <algorithm>
#include <cmath>
#include <tuple>

#include "mfa/decoding.hpp"
#include "mfa/errors.hpp"

namespace mfa {

namespace {

struct Hypothesis {
  std::vector<TokenId> tokens;  // generated so far, EOS excluded
  double log_prob = 0.0;
  DecoderState state;
};

struct Candidate {
  double log_prob;
  TokenId token;
  std::size_t parent;
};

struct Finished {
  std::vector<TokenId> tokens;
  double log_prob;
  double rank_score;
};

double rank_score(double log_prob, std::size_t length, double alpha) {
  if (alpha == 0.0) return log_prob;
  return log_prob / std::pow(static_cast<double>(std::max<std::size_t>(length, 1)), alpha);
}

}  // namespace

BeamResult beam_search(const FeatureSet& features, const ModelParams& params,
                       const ModelConfig& config, const BeamOptions& options) {
  if (options.beam_size == 0) throw ConfigError("beam_search: beam size must be >= 1");
  if (options.max_len == 0) throw ConfigError("beam_search: max_len must be >= 1");
  features.validate(params.dims);
  const Contexts ctx = make_contexts(features, params, config);
  const std::size_t B = options.beam_size;

  std::vector<Hypothesis> live(1);
  live[0].state = init_state(features, params, config);
  std::vector<Finished> finished;

  for (std::size_t step = 1; step <= options.max_len; ++step) {
    std::vector<Candidate> cands;
    std::vector<DecoderState> next_states(live.size());
    for (std::size_t r = 0; r < live.size(); ++r) {
      next_states[r] = live[r].state;
      const TokenId last = live[r].tokens.empty() ? kBos : live[r].tokens.back();
      const Vec logp = step_log_probs(next_states[r], last, ctx, params, config);
      for (std::size_t w = 0; w < logp.size(); ++w) {
        cands.push_back({live[r].log_prob + logp[w], static_cast<TokenId>(w), r});
      }
    }
    const std::size_t keep = std::min(B, cands.size());
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return std::tie(a.token, a.parent) < std::tie(b.token, b.parent);
    };
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      if (c.token == kEos) {
        const auto& toks = live[c.parent].tokens;
        finished.push_back({toks, c.log_prob, rank_score(c.log_prob, toks.size() + 1, options.length_penalty)});
        continue;
      }
      Hypothesis h;
      h.tokens = live[c.parent].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.log_prob;
      h.state = next_states[c.parent];
      next.push_back(std::move(h));
    }
    live = std::move(next);
    if (finished.size() >= B || live.empty()) break;
  }

  BeamResult out;
  if (!finished.empty()) {
    // stable: earlier-finished hypotheses win exact ties
    const auto best = std::min_element(finished.begin(), finished.end(), [](const Finished& a, const Finished& b) {
      return a.rank_score > b.rank_score;
    });
    out.tokens = best->tokens;
    out.log_prob = best->log_prob;
    out.finished = true;
    return out;
  }
  const auto best = std::min_element(live.begin(), live.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return rank_score(a.log_prob, a.tokens.size(), options.length_penalty) >
           rank_score(b.log_prob, b.tokens.size(), options.length_penalty);
  });
  out.tokens = best->tokens;
  out.log_prob = best->log_prob;
  out.finished = false;
  return out;
}

BeamResult greedy_decode(const FeatureSet& features, const ModelParams& params,
                         const ModelConfig& config, std::size_t max_len) {
  BeamOptions o;
  o.beam_size = 1;
  o.max_len = max_len;
  return beam_search(features, params, config, o);
}

}  // namespace mfa
