#pragma once

// Independent reference implementations used as test oracles. They are written as plain
// loops over the model recurrences and deliberately share no code with the library beyond reading
// parameter values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mfa/metrics.hpp"
#include "mfa/model.hpp"

namespace oracle {

using V = std::vector<double>;

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double phi(double x, mfa::Activation a) {
  switch (a) {
    case mfa::Activation::sigmoid:
      return sigm(x);
    case mfa::Activation::tanh:
      return std::tanh(x);
    default:
      return x;
  }
}

inline V row(const mfa::Mat& m, std::size_t r) {
  V v(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) v[c] = m(r, c);
  return v;
}

inline V col(const mfa::Mat& m) {
  V v(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) v[r] = m(r, 0);
  return v;
}

// y = W x
inline V affine(const mfa::Mat& W, const V& x) {
  V y(W.rows(), 0.0);
  for (std::size_t r = 0; r < W.rows(); ++r) {
    for (std::size_t c = 0; c < W.cols(); ++c) y[r] += W(r, c) * x[c];
  }
  return y;
}

struct Attn {
  V weights;
  V y;
};

// e_i = qᵀ U c_i, written as the double sum over U's entries.
inline Attn attend(const V& q, const std::vector<V>& ctx, const mfa::Mat& U, std::size_t width) {
  Attn a;
  a.y.assign(width, 0.0);
  if (ctx.empty()) return a;
  V e(ctx.size(), 0.0);
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    for (std::size_t r = 0; r < U.rows(); ++r) {
      for (std::size_t c = 0; c < U.cols(); ++c) e[i] += q[r] * U(r, c) * ctx[i][c];
    }
  }
  double mx = *std::max_element(e.begin(), e.end());
  double z = 0.0;
  for (double x : e) z += std::exp(x - mx);
  for (double x : e) a.weights.push_back(std::exp(x - mx) / z);
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    for (std::size_t k = 0; k < width; ++k) a.y[k] += a.weights[i] * ctx[i][k];
  }
  return a;
}

struct Cell {
  V h, c;
};

inline Cell lstm(const V& x, const Cell& prev, const mfa::ModelParams& p, bool tanh_out) {
  const std::size_t n = prev.h.size();
  Cell out{V(n), V(n)};
  for (std::size_t k = 0; k < n; ++k) {
    double a[4];
    for (int g = 0; g < 4; ++g) {
      a[g] = p.lstm_b[g](k, 0);
      for (std::size_t j = 0; j < x.size(); ++j) a[g] += p.lstm_W[g](k, j) * x[j];
      for (std::size_t j = 0; j < n; ++j) a[g] += p.lstm_U[g](k, j) * prev.h[j];
    }
    const double i = sigm(a[0]), f = sigm(a[1]), o = sigm(a[2]), g = std::tanh(a[3]);
    out.c[k] = f * prev.c[k] + i * g;
    out.h[k] = o * (tanh_out ? std::tanh(out.c[k]) : out.c[k]);
  }
  return out;
}

inline V fusion(const mfa::Mat& W, const mfa::Mat& b, const V& first, const V& s, const V& v,
                const V& f, const mfa::Mat& wv, const mfa::Mat& wf, mfa::Activation act) {
  V z = first;
  z.insert(z.end(), s.begin(), s.end());
  for (std::size_t k = 0; k < v.size(); ++k) z.push_back(wv(k, 0) * v[k]);
  for (std::size_t k = 0; k < f.size(); ++k) z.push_back(wf(k, 0) * f[k]);
  V out = affine(W, z);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = phi(out[k] + b(k, 0), act);
  return out;
}

struct Decoder {
  const mfa::ModelParams& p;
  const mfa::ModelConfig& cfg;
  std::vector<V> sem, tem, mot;

  Decoder(const mfa::FeatureSet& fs, const mfa::ModelParams& params, const mfa::ModelConfig& config)
      : p(params), cfg(config) {
    if (cfg.branches.semantic) {
      for (auto a : fs.attributes) sem.push_back(row(p.embedding, a));
    }
    if (cfg.branches.temporal) tem = fs.temporal;
    if (cfg.branches.motion) mot = fs.motion;
  }

  static V mean(const std::vector<V>& xs, std::size_t w) {
    V m(w, 0.0);
    for (const auto& x : xs) {
      for (std::size_t k = 0; k < w; ++k) m[k] += x[k] / static_cast<double>(xs.size());
    }
    return m;
  }

  Cell start() const {
    const auto& d = p.dims;
    V z = mean(sem, d.embed);
    const V mv = mean(tem, d.temporal), mf = mean(mot, d.motion);
    z.insert(z.end(), mv.begin(), mv.end());
    z.insert(z.end(), mf.begin(), mf.end());
    const V m0 = affine(p.init_W, z);
    return lstm(m0, Cell{V(d.hidden, 0.0), V(d.hidden, 0.0)}, p, cfg.cell_output_tanh);
  }

  // Consumes `word`, returns log p(next) and advances the cell.
  V step(Cell& cell, mfa::TokenId word) const {
    const auto& d = p.dims;
    const V x = row(p.embedding, word);
    const Attn s = attend(x, sem, p.attn_in_semantic, d.embed);
    const Attn v = attend(x, tem, p.attn_in_temporal, d.temporal);
    const Attn f = attend(x, mot, p.attn_in_motion, d.motion);
    const V mx = fusion(p.fuse_in_W, p.fuse_in_b, x, s.y, v.y, f.y, p.imp_in_temporal, p.imp_in_motion, cfg.fusion);
    cell = lstm(mx, cell, p, cfg.cell_output_tanh);
    const Attn sh = attend(cell.h, sem, p.attn_out_semantic, d.embed);
    const Attn vh = attend(cell.h, tem, p.attn_out_temporal, d.temporal);
    const Attn fh = attend(cell.h, mot, p.attn_out_motion, d.motion);
    const V mh = fusion(p.fuse_out_W, p.fuse_out_b, cell.h, sh.y, vh.y, fh.y, p.imp_out_temporal,
                        p.imp_out_motion, cfg.fusion);
    V logits(d.vocab, 0.0);
    for (std::size_t w = 0; w < d.vocab; ++w) {
      for (std::size_t k = 0; k < d.embed; ++k) logits[w] += p.embedding(w, k) * mh[k];
    }
    const double mxl = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mxl);
    for (double& l : logits) l = l - mxl - std::log(z);
    return logits;
  }
};

// −Σ log p(w_{t+1} | w_≤t), eval mode.
inline double caption_loss(const mfa::FeatureSet& fs, const std::vector<mfa::TokenId>& caption,
                           const mfa::ModelParams& p, const mfa::ModelConfig& cfg) {
  Decoder dec(fs, p, cfg);
  Cell cell = dec.start();
  double loss = 0.0;
  for (std::size_t t = 0; t + 1 < caption.size(); ++t) loss -= dec.step(cell, caption[t])[caption[t + 1]];
  return loss;
}

struct Best {
  std::vector<mfa::TokenId> tokens;  // EOS excluded
  double log_prob = -INFINITY;
};

// Best EOS-terminated sequence of at most max_len generated tokens, by brute force.
inline Best exhaustive_decode(const mfa::FeatureSet& fs, const mfa::ModelParams& p,
                              const mfa::ModelConfig& cfg, std::size_t max_len) {
  Decoder dec(fs, p, cfg);
  Best best;
  std::vector<mfa::TokenId> prefix;
  std::function<void(Cell, mfa::TokenId, double)> rec = [&](Cell cell, mfa::TokenId last, double lp) {
    const V logp = dec.step(cell, last);
    for (mfa::TokenId w = 0; w < logp.size(); ++w) {
      const double s = lp + logp[w];
      if (w == mfa::kEos) {
        if (s > best.log_prob) best = {prefix, s};
      } else if (prefix.size() + 1 < max_len) {
        prefix.push_back(w);
        rec(cell, w, s);
        prefix.pop_back();
      }
    }
  };
  rec(dec.start(), mfa::kBos, 0.0);
  return best;
}

// ---- metric oracles -------------------------------------------------------

using Toks = std::vector<std::string>;

inline std::map<Toks, int> ngram_counts(const Toks& t, int n) {
  std::map<Toks, int> m;
  for (int i = 0; i + n <= static_cast<int>(t.size()); ++i) ++m[Toks(t.begin() + i, t.begin() + i + n)];
  return m;
}

struct BleuParts {
  std::vector<double> matched, total;  // index n-1
  double c = 0, r = 0;
};

inline BleuParts bleu_parts(const std::vector<std::pair<Toks, std::vector<Toks>>>& corpus) {
  BleuParts b;
  b.matched.assign(4, 0);
  b.total.assign(4, 0);
  for (const auto& [cand, refs] : corpus) {
    b.c += static_cast<double>(cand.size());
    // closest reference length, ties to the shorter
    double best_len = -1, best_diff = 1e18;
    for (const auto& r : refs) {
      const double diff = std::abs(static_cast<double>(r.size()) - static_cast<double>(cand.size()));
      if (diff < best_diff || (diff == best_diff && static_cast<double>(r.size()) < best_len)) {
        best_diff = diff;
        best_len = static_cast<double>(r.size());
      }
    }
    b.r += best_len;
    for (int n = 1; n <= 4; ++n) {
      for (const auto& [g, cnt] : ngram_counts(cand, n)) {
        int mx = 0;
        for (const auto& r : refs) {
          auto rc = ngram_counts(r, n);
          auto it = rc.find(g);
          if (it != rc.end()) mx = std::max(mx, it->second);
        }
        b.matched[n - 1] += std::min(cnt, mx);
        b.total[n - 1] += cnt;
      }
    }
  }
  return b;
}

inline double bleu(const std::vector<std::pair<Toks, std::vector<Toks>>>& corpus, int n) {
  const BleuParts b = bleu_parts(corpus);
  double logsum = 0;
  for (int k = 0; k < n; ++k) {
    if (b.matched[k] == 0) return 0.0;
    logsum += std::log(b.matched[k] / b.total[k]);
  }
  const double bp = b.c > b.r ? 1.0 : std::exp(1.0 - b.r / b.c);
  return bp * std::exp(logsum / n);
}

inline int lcs(const Toks& a, const Toks& b) {
  std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

inline double rouge_pair(const Toks& c, const Toks& r) {
  const double l = lcs(c, r);
  if (l == 0) return 0.0;
  const double p = l / static_cast<double>(c.size()), rr = l / static_cast<double>(r.size());
  const double b2 = 1.2 * 1.2;
  return (1 + b2) * p * rr / (rr + b2 * p);
}

// Plain CIDEr ×10: idf = log(N / max(1, df)), df over each video's reference set.
inline double cider(const std::vector<std::pair<Toks, std::vector<Toks>>>& corpus) {
  const double N = static_cast<double>(corpus.size());
  double total = 0;
  for (int n = 1; n <= 4; ++n) {
    std::map<Toks, int> df;
    for (const auto& [cand, refs] : corpus) {
      std::set<Toks> seen;
      for (const auto& r : refs) {
        for (const auto& [g, c] : ngram_counts(r, n)) seen.insert(g);
      }
      for (const auto& g : seen) ++df[g];
    }
    auto vec = [&](const Toks& t) {
      std::map<Toks, double> v;
      for (const auto& [g, c] : ngram_counts(t, n)) {
        const double d = df.count(g) ? df[g] : 1;
        v[g] = c * std::log(N / d);
      }
      return v;
    };
    auto cos = [](const std::map<Toks, double>& a, const std::map<Toks, double>& b) {
      double dotp = 0, na = 0, nb = 0;
      for (const auto& [g, x] : a) {
        na += x * x;
        auto it = b.find(g);
        if (it != b.end()) dotp += x * it->second;
      }
      for (const auto& [g, x] : b) nb += x * x;
      return (na == 0 || nb == 0) ? 0.0 : dotp / std::sqrt(na * nb);
    };
    for (const auto& [cand, refs] : corpus) {
      double s = 0;
      for (const auto& r : refs) s += cos(vec(cand), vec(r));
      total += s / static_cast<double>(refs.size()) / 4.0;
    }
  }
  return 10.0 * total / N;
}

// Enumerates every alignment with the maximal number of exact matches and returns
// (matches, fewest chunks). Exponential; for short sentences only.
inline std::pair<int, int> meteor_alignment(const Toks& c, const Toks& r) {
  int best_m = 0, best_ch = 0;
  std::vector<int> map(c.size(), -1);
  std::vector<bool> used(r.size(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == c.size()) {
      int m = 0, ch = 0, prev_c = -2, prev_r = -2;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (map[k] < 0) continue;
        ++m;
        if (!(prev_c == static_cast<int>(k) - 1 && prev_r == map[k] - 1)) ++ch;
        prev_c = static_cast<int>(k);
        prev_r = map[k];
      }
      if (m > best_m || (m == best_m && ch < best_ch)) {
        best_m = m;
        best_ch = ch;
      }
      return;
    }
    rec(i + 1);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!used[j] && r[j] == c[i]) {
        used[j] = true;
        map[i] = static_cast<int>(j);
        rec(i + 1);
        map[i] = -1;
        used[j] = false;
      }
    }
  };
  rec(0);
  return {best_m, best_ch};
}

inline double meteor_pair(const Toks& c, const Toks& r) {
  const auto [m, ch] = meteor_alignment(c, r);
  if (m == 0) return 0.0;
  const double P = static_cast<double>(m) / static_cast<double>(c.size());
  const double R = static_cast<double>(m) / static_cast<double>(r.size());
  const double fmean = 10 * P * R / (R + 9 * P);
  const double frag = static_cast<double>(ch) / m;
  return fmean * (1 - 0.5 * frag * frag * frag);
}

}  // namespace oracle
