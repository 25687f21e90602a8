#include "mfa/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mfa/errors.hpp"

namespace mfa {

void Dims::validate() const {
  if (vocab == 0 || embed == 0 || hidden == 0 || temporal == 0 || motion == 0) {
    throw ConfigError("Dims: all dimensions must be positive (V=" + std::to_string(vocab) +
                      ", d_e=" + std::to_string(embed) + ", d_h=" + std::to_string(hidden) +
                      ", d_v=" + std::to_string(temporal) + ", d_f=" + std::to_string(motion) +
                      ")");
  }
  if (vocab <= kNumReserved) throw ConfigError("Dims: vocabulary has no non-reserved tokens");
}

BranchMask BranchMask::parse(std::string_view name) {
  BranchMask m{false, false, false};
  if (name.empty()) throw ConfigError("empty branch mask");
  for (char ch : name) {
    switch (std::toupper(static_cast<unsigned char>(ch))) {
      case 'T':
        m.temporal = true;
        break;
      case 'M':
        m.motion = true;
        break;
      case 'S':
        m.semantic = true;
        break;
      default:
        throw ConfigError("unknown branch '" + std::string(1, ch) + "' in mask '" +
                          std::string(name) + "'");
    }
  }
  return m;
}

std::string BranchMask::name() const {
  std::string s;
  if (temporal) s += 'T';
  if (motion) s += 'M';
  if (semantic) s += 'S';
  return s.empty() ? "none" : s;
}

ModelParams ModelParams::zeros(const Dims& d) {
  d.validate();
  ModelParams p;
  p.dims = d;
  const std::size_t de = d.embed, dh = d.hidden, dv = d.temporal, df = d.motion;
  p.embedding = Mat(d.vocab, de);
  for (int g = 0; g < 4; ++g) {
    p.lstm_W[g] = Mat(dh, dh);
    p.lstm_U[g] = Mat(dh, dh);
    p.lstm_b[g] = Mat(dh, 1);
  }
  p.attn_in_semantic = Mat(de, de);
  p.attn_in_temporal = Mat(de, dv);
  p.attn_in_motion = Mat(de, df);
  p.attn_out_semantic = Mat(dh, de);
  p.attn_out_temporal = Mat(dh, dv);
  p.attn_out_motion = Mat(dh, df);
  p.fuse_in_W = Mat(dh, de + de + dv + df);
  p.fuse_in_b = Mat(dh, 1);
  p.imp_in_temporal = Mat(dv, 1);
  p.imp_in_motion = Mat(df, 1);
  p.init_W = Mat(dh, de + dv + df);
  p.fuse_out_W = Mat(de, dh + de + dv + df);
  p.fuse_out_b = Mat(de, 1);
  p.imp_out_temporal = Mat(dv, 1);
  p.imp_out_motion = Mat(df, 1);
  return p;
}

ModelParams ModelParams::initialized(const Dims& d, Rng& rng) {
  ModelParams p = zeros(d);
  p.for_each_block([&rng](std::string_view, Mat& m, BlockKind kind) {
    switch (kind) {
      case BlockKind::matrix: {
        const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (double& v : m.flat()) v = rng.uniform(-r, r);
        break;
      }
      case BlockKind::bias:
        m.fill(0.0);
        break;
      case BlockKind::importance:
        m.fill(1.0);
        break;
    }
  });
  return p;
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for_each_block([&n](std::string_view, const Mat& m, BlockKind) { n += m.size(); });
  return n;
}

Vec ModelParams::flatten() const {
  Vec out;
  out.reserve(num_values());
  for_each_block([&out](std::string_view, const Mat& m, BlockKind) {
    out.insert(out.end(), m.flat().begin(), m.flat().end());
  });
  return out;
}

void ModelParams::unflatten(std::span<const double> values) {
  if (values.size() != num_values()) {
    throw ShapeError("unflatten: expected " + std::to_string(num_values()) + " values, got " +
                     std::to_string(values.size()));
  }
  std::size_t off = 0;
  for_each_block([&](std::string_view, Mat& m, BlockKind) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), m.size(), m.flat().begin());
    off += m.size();
  });
}

void ModelParams::set_zero() {
  for_each_block([](std::string_view, Mat& m, BlockKind) { m.fill(0.0); });
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  if (!(dims == other.dims)) throw ShapeError("add_scaled: parameter dims differ");
  std::vector<const Mat*> src;
  other.for_each_block([&src](std::string_view, const Mat& m, BlockKind) { src.push_back(&m); });
  std::size_t k = 0;
  for_each_block([&](std::string_view, Mat& m, BlockKind) { axpy(scale, src[k++]->flat(), m.flat()); });
}

double ModelParams::squared_norm() const {
  double s = 0.0;
  for_each_block([&s](std::string_view, const Mat& m, BlockKind) {
    for (double v : m.flat()) s += v * v;
  });
  return s;
}

void FeatureSet::validate(const Dims& dims) const {
  if (temporal.empty()) throw DomainError("FeatureSet: temporal feature list is empty");
  if (motion.empty()) throw DomainError("FeatureSet: motion feature list is empty");
  for (const auto& v : temporal) {
    if (v.size() != dims.temporal) {
      throw ShapeError("FeatureSet: temporal vector of width " + std::to_string(v.size()) +
                       ", expected " + std::to_string(dims.temporal));
    }
  }
  for (const auto& v : motion) {
    if (v.size() != dims.motion) {
      throw ShapeError("FeatureSet: motion vector of width " + std::to_string(v.size()) +
                       ", expected " + std::to_string(dims.motion));
    }
  }
  for (TokenId a : attributes) {
    if (a >= dims.vocab) {
      throw VocabularyError("FeatureSet: attribute id " + std::to_string(a) +
                            " outside vocabulary of size " + std::to_string(dims.vocab));
    }
  }
}

Vec embed(const Mat& embedding, TokenId token) {
  if (token >= embedding.rows()) {
    throw VocabularyError("embed: token id " + std::to_string(token) +
                          " outside vocabulary of size " + std::to_string(embedding.rows()));
  }
  auto r = embedding.row(token);
  return Vec(r.begin(), r.end());
}

Contexts make_contexts(const FeatureSet& features, const ModelParams& params,
                       const ModelConfig& config) {
  features.validate(params.dims);
  Contexts ctx;
  if (config.branches.temporal) ctx.temporal = features.temporal;
  if (config.branches.motion) ctx.motion = features.motion;
  if (config.branches.semantic) {
    ctx.attribute_ids = features.attributes;
    for (TokenId a : features.attributes) ctx.semantic.push_back(embed(params.embedding, a));
  }
  return ctx;
}

AttentionResult attend(std::span<const double> query, std::span<const Vec> contexts,
                       const Mat& U) {
  if (contexts.empty()) throw DomainError("attend: empty context list");
  if (U.rows() != query.size() || U.cols() != contexts.front().size()) {
    throw ShapeError("attend: U is " + U.shape_string() + " but query has length " +
                     std::to_string(query.size()) + " and contexts width " +
                     std::to_string(contexts.front().size()));
  }
  // queryᵀ U c_i = (Uᵀ query) · c_i
  const Vec projected = matvec_t(U, query);
  Vec scores(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) scores[i] = dot(projected, contexts[i]);
  AttentionResult r;
  r.weights = softmax(scores);
  r.output.assign(U.cols(), 0.0);
  for (std::size_t i = 0; i < contexts.size(); ++i) axpy(r.weights[i], contexts[i], r.output);
  return r;
}

LstmTrace lstm_step(std::span<const double> x, std::span<const double> h_prev,
                    std::span<const double> c_prev, const ModelParams& params,
                    bool cell_output_tanh) {
  const std::size_t dh = params.dims.hidden;
  if (x.size() != dh || h_prev.size() != dh || c_prev.size() != dh) {
    throw ShapeError("lstm_step: expected vectors of length " + std::to_string(dh));
  }
  std::array<Vec, 4> pre;
  for (int g = 0; g < 4; ++g) {
    pre[g] = matvec(params.lstm_W[g], x);
    const Vec rec = matvec(params.lstm_U[g], h_prev);
    for (std::size_t k = 0; k < dh; ++k) pre[g][k] += rec[k] + params.lstm_b[g](k, 0);
  }
  LstmTrace t;
  t.x.assign(x.begin(), x.end());
  t.h_prev.assign(h_prev.begin(), h_prev.end());
  t.c_prev.assign(c_prev.begin(), c_prev.end());
  t.i = activate(pre[ModelParams::kInput], Activation::sigmoid);
  t.f = activate(pre[ModelParams::kForget], Activation::sigmoid);
  t.o = activate(pre[ModelParams::kOutput], Activation::sigmoid);
  t.g = activate(pre[ModelParams::kCell], Activation::tanh);
  t.c.resize(dh);
  t.c_out.resize(dh);
  t.h.resize(dh);
  for (std::size_t k = 0; k < dh; ++k) {
    t.c[k] = t.f[k] * c_prev[k] + t.i[k] * t.g[k];
    t.c_out[k] = cell_output_tanh ? std::tanh(t.c[k]) : t.c[k];
    t.h[k] = t.o[k] * t.c_out[k];
  }
  return t;
}

namespace {

FusionTrace fuse(const Mat& W, const Mat& b, std::span<const double> first,
                 std::span<const double> semantic, std::span<const double> temporal,
                 std::span<const double> motion, const Mat& imp_temporal, const Mat& imp_motion,
                 Activation act) {
  if (temporal.size() != imp_temporal.rows() || motion.size() != imp_motion.rows()) {
    throw ShapeError("fusion: importance vector width does not match the attended vector");
  }
  FusionTrace t;
  t.z = concat({first, semantic, hadamard(temporal, imp_temporal.flat()),
                hadamard(motion, imp_motion.flat())});
  if (t.z.size() != W.cols()) {
    throw ShapeError("fusion: concatenated input of width " + std::to_string(t.z.size()) +
                     " does not match W " + W.shape_string());
  }
  t.out = matvec(W, t.z);
  for (std::size_t k = 0; k < t.out.size(); ++k) t.out[k] = activate(t.out[k] + b(k, 0), act);
  return t;
}

Vec apply_mask(std::span<const double> v, std::span<const double> mask) {
  if (mask.empty()) return Vec(v.begin(), v.end());
  return hadamard(v, mask);
}

Vec mean_of(const std::vector<Vec>& vs, std::size_t width) {
  Vec m(width, 0.0);
  if (vs.empty()) return m;
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (const auto& v : vs) axpy(inv, v, m);
  return m;
}

AttentionResult attend_branch(std::span<const double> query, const std::vector<Vec>& contexts,
                              const Mat& U, std::size_t width) {
  if (contexts.empty()) return AttentionResult{{}, Vec(width, 0.0)};
  return attend(query, contexts, U);
}

Vec dropout_mask(std::size_t n, double rate, Rng& rng) {
  Vec mask(n);
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.bernoulli(rate) ? 0.0 : keep;
  return mask;
}

// Everything one decoding step computes; shared by training and decoding.
void run_step(const Contexts& ctx, const ModelParams& p, const ModelConfig& cfg, TokenId input,
              std::span<const double> h_prev, std::span<const double> c_prev,
              const ForwardOptions& opts, StepTrace& st) {
  const Dims& d = p.dims;
  st.input = input;
  st.x = embed(p.embedding, input);

  st.in_semantic = attend_branch(st.x, ctx.semantic, p.attn_in_semantic, d.embed);
  st.in_temporal = attend_branch(st.x, ctx.temporal, p.attn_in_temporal, d.temporal);
  st.in_motion = attend_branch(st.x, ctx.motion, p.attn_in_motion, d.motion);
  st.fuse_in = fuse(p.fuse_in_W, p.fuse_in_b, st.x, st.in_semantic.output,
                    st.in_temporal.output, st.in_motion.output, p.imp_in_temporal,
                    p.imp_in_motion, cfg.fusion);

  const bool drop = opts.train && opts.dropout > 0.0;
  if (drop) st.drop_in = dropout_mask(d.hidden, opts.dropout, *opts.rng);
  st.lstm_input = apply_mask(st.fuse_in.out, st.drop_in);

  st.lstm = lstm_step(st.lstm_input, h_prev, c_prev, p, cfg.cell_output_tanh);
  const Vec& h = st.lstm.h;

  st.out_semantic = attend_branch(h, ctx.semantic, p.attn_out_semantic, d.embed);
  st.out_temporal = attend_branch(h, ctx.temporal, p.attn_out_temporal, d.temporal);
  st.out_motion = attend_branch(h, ctx.motion, p.attn_out_motion, d.motion);
  st.fuse_out = fuse(p.fuse_out_W, p.fuse_out_b, h, st.out_semantic.output,
                     st.out_temporal.output, st.out_motion.output, p.imp_out_temporal,
                     p.imp_out_motion, cfg.fusion);

  if (drop) st.drop_out = dropout_mask(d.embed, opts.dropout, *opts.rng);
  st.projected = apply_mask(st.fuse_out.out, st.drop_out);

  st.logits = matvec(p.embedding, st.projected);
  st.probs = softmax(st.logits);
}

}  // namespace

Vec fuse_input(std::span<const double> x, std::span<const double> semantic,
               std::span<const double> temporal, std::span<const double> motion,
               const ModelParams& params, Activation act, std::span<const double> dropout_mask) {
  auto t = fuse(params.fuse_in_W, params.fuse_in_b, x, semantic, temporal, motion,
                params.imp_in_temporal, params.imp_in_motion, act);
  return apply_mask(t.out, dropout_mask);
}

Vec fuse_output(std::span<const double> h, std::span<const double> semantic,
                std::span<const double> temporal, std::span<const double> motion,
                const ModelParams& params, Activation act,
                std::span<const double> dropout_mask) {
  auto t = fuse(params.fuse_out_W, params.fuse_out_b, h, semantic, temporal, motion,
                params.imp_out_temporal, params.imp_out_motion, act);
  return apply_mask(t.out, dropout_mask);
}

Vec word_distribution(std::span<const double> m, const Mat& embedding) {
  return softmax(matvec(embedding, m));
}

InitTrace init_state_trace(const Contexts& ctx, const ModelParams& p, const ModelConfig& cfg) {
  const Dims& d = p.dims;
  InitTrace t;
  t.mean_semantic = mean_of(ctx.semantic, d.embed);
  t.mean_temporal = mean_of(ctx.temporal, d.temporal);
  t.mean_motion = mean_of(ctx.motion, d.motion);
  t.z = concat({t.mean_semantic, t.mean_temporal, t.mean_motion});
  t.m0 = matvec(p.init_W, t.z);
  const Vec zero(d.hidden, 0.0);
  t.lstm = lstm_step(t.m0, zero, zero, p, cfg.cell_output_tanh);
  return t;
}

DecoderState init_state(const FeatureSet& features, const ModelParams& params,
                        const ModelConfig& config) {
  const Contexts ctx = make_contexts(features, params, config);
  InitTrace t = init_state_trace(ctx, params, config);
  return {std::move(t.lstm.h), std::move(t.lstm.c)};
}

Vec step_log_probs(DecoderState& state, TokenId token, const Contexts& contexts,
                   const ModelParams& params, const ModelConfig& config) {
  StepTrace st;
  run_step(contexts, params, config, token, state.h, state.c, ForwardOptions{}, st);
  state.h = std::move(st.lstm.h);
  state.c = std::move(st.lstm.c);
  return log_softmax(st.logits);
}

ForwardResult forward_caption(const FeatureSet& features, std::span<const TokenId> caption,
                              const ModelParams& params, const ModelConfig& config,
                              const ForwardOptions& options) {
  if (caption.size() < 2) throw DomainError("forward_caption: caption needs at least BOS and EOS");
  if (caption.front() != kBos || caption.back() != kEos) {
    throw DomainError("forward_caption: caption must start with BOS and end with EOS");
  }
  if (options.train && options.dropout > 0.0) {
    if (options.dropout >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
    if (options.rng == nullptr) throw ConfigError("forward_caption: dropout requires an rng");
  }
  if (!(config.dims == params.dims)) throw ConfigError("forward_caption: config/params dims differ");
  for (TokenId t : caption) {
    if (t >= params.dims.vocab) {
      throw VocabularyError("forward_caption: token id " + std::to_string(t) +
                            " outside vocabulary of size " + std::to_string(params.dims.vocab));
    }
  }

  ForwardResult r;
  ForwardTrace& tr = r.trace;
  tr.dims = params.dims;
  tr.config = config;
  tr.contexts = make_contexts(features, params, config);
  tr.init = init_state_trace(tr.contexts, params, config);

  const std::size_t n = caption.size() - 1;
  tr.steps.resize(n);
  const Vec* h = &tr.init.lstm.h;
  const Vec* c = &tr.init.lstm.c;
  for (std::size_t k = 0; k < n; ++k) {
    StepTrace& st = tr.steps[k];
    run_step(tr.contexts, params, config, caption[k], *h, *c, options, st);
    st.target = caption[k + 1];
    st.log_prob_target = log_softmax(st.logits)[st.target];
    r.loss -= st.log_prob_target;
    h = &st.lstm.h;
    c = &st.lstm.c;
  }
  return r;
}

}  // namespace mfa
