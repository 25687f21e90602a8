#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfa/numerics.hpp"

namespace mfa {

using TokenId = std::uint32_t;

// Reserved vocabulary ids.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kNumReserved = 4;

struct Dims {
  std::size_t vocab = 0;
  std::size_t embed = 300;
  std::size_t hidden = 512;
  std::size_t temporal = 0;
  std::size_t motion = 0;

  void validate() const;
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Which context branches feed the attention layers. Disabled branches contribute
/// zero vectors, so one parameter layout serves every ablation.
struct BranchMask {
  bool temporal = true;
  bool motion = true;
  bool semantic = true;

  /// Accepts the ablation names T, M, S, TM, TS, MS, TMS (case-insensitive).
  static BranchMask parse(std::string_view name);
  std::string name() const;
  friend bool operator==(const BranchMask&, const BranchMask&) = default;
};

struct ModelConfig {
  Dims dims;
  /// φ of both multimodal layers.
  Activation fusion = Activation::identity;
  /// h = o ⊙ tanh(c) instead of h = o ⊙ c.
  bool cell_output_tanh = false;
  BranchMask branches;
};

enum class BlockKind { matrix, bias, importance };

/// Every learnable array. Vectors are stored as n×1 matrices.
struct ModelParams {
  enum Gate { kInput = 0, kForget = 1, kOutput = 2, kCell = 3 };

  Dims dims;

  Mat embedding;  // V × d_e, shared by words, attributes and the output projection

  std::array<Mat, 4> lstm_W;  // d_h × d_h
  std::array<Mat, 4> lstm_U;  // d_h × d_h
  std::array<Mat, 4> lstm_b;  // d_h

  // Bilinear attention scores. "in" attends with the word embedding as query,
  // "out" with the LSTM hidden state.
  Mat attn_in_semantic;   // d_e × d_e
  Mat attn_in_temporal;   // d_e × d_v
  Mat attn_in_motion;     // d_e × d_f
  Mat attn_out_semantic;  // d_h × d_e
  Mat attn_out_temporal;  // d_h × d_v
  Mat attn_out_motion;    // d_h × d_f

  Mat fuse_in_W;  // d_h × (d_e + d_e + d_v + d_f)
  Mat fuse_in_b;  // d_h
  Mat imp_in_temporal;  // d_v
  Mat imp_in_motion;    // d_f

  Mat init_W;  // d_h × (d_e + d_v + d_f), no bias

  Mat fuse_out_W;  // d_e × (d_h + d_e + d_v + d_f)
  Mat fuse_out_b;  // d_e
  Mat imp_out_temporal;  // d_v
  Mat imp_out_motion;    // d_f

  /// All arrays zero-filled with the shapes implied by dims.
  static ModelParams zeros(const Dims& dims);
  /// Glorot-uniform matrices, zero biases, unit importance vectors.
  static ModelParams initialized(const Dims& dims, Rng& rng);

  /// Visits blocks in the canonical (checkpoint) order.
  template <typename F>
  void for_each_block(F&& f) {
    visit_blocks(*this, f);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    visit_blocks(*this, f);
  }

  std::size_t num_values() const;
  Vec flatten() const;
  void unflatten(std::span<const double> values);
  void set_zero();
  /// this += scale · other (shapes must match).
  void add_scaled(const ModelParams& other, double scale);
  double squared_norm() const;

 private:
  template <typename Self, typename F>
  static void visit_blocks(Self& p, F& f) {
    static constexpr std::string_view kW[4] = {"lstm_W_i", "lstm_W_f", "lstm_W_o", "lstm_W_g"};
    static constexpr std::string_view kU[4] = {"lstm_U_i", "lstm_U_f", "lstm_U_o", "lstm_U_g"};
    static constexpr std::string_view kB[4] = {"lstm_b_i", "lstm_b_f", "lstm_b_o", "lstm_b_g"};
    f(std::string_view("embedding"), p.embedding, BlockKind::matrix);
    for (int g = 0; g < 4; ++g) f(kW[g], p.lstm_W[g], BlockKind::matrix);
    for (int g = 0; g < 4; ++g) f(kU[g], p.lstm_U[g], BlockKind::matrix);
    for (int g = 0; g < 4; ++g) f(kB[g], p.lstm_b[g], BlockKind::bias);
    f(std::string_view("attn_in_semantic"), p.attn_in_semantic, BlockKind::matrix);
    f(std::string_view("attn_in_temporal"), p.attn_in_temporal, BlockKind::matrix);
    f(std::string_view("attn_in_motion"), p.attn_in_motion, BlockKind::matrix);
    f(std::string_view("attn_out_semantic"), p.attn_out_semantic, BlockKind::matrix);
    f(std::string_view("attn_out_temporal"), p.attn_out_temporal, BlockKind::matrix);
    f(std::string_view("attn_out_motion"), p.attn_out_motion, BlockKind::matrix);
    f(std::string_view("fuse_in_W"), p.fuse_in_W, BlockKind::matrix);
    f(std::string_view("fuse_in_b"), p.fuse_in_b, BlockKind::bias);
    f(std::string_view("imp_in_temporal"), p.imp_in_temporal, BlockKind::importance);
    f(std::string_view("imp_in_motion"), p.imp_in_motion, BlockKind::importance);
    f(std::string_view("init_W"), p.init_W, BlockKind::matrix);
    f(std::string_view("fuse_out_W"), p.fuse_out_W, BlockKind::matrix);
    f(std::string_view("fuse_out_b"), p.fuse_out_b, BlockKind::bias);
    f(std::string_view("imp_out_temporal"), p.imp_out_temporal, BlockKind::importance);
    f(std::string_view("imp_out_motion"), p.imp_out_motion, BlockKind::importance);
  }
};

using Gradients = ModelParams;

/// One video's inputs. Lists may have different lengths.
struct FeatureSet {
  std::vector<Vec> temporal;
  std::vector<Vec> motion;
  std::vector<TokenId> attributes;

  void validate(const Dims& dims) const;
};

/// Attention branch contexts resolved for one video (attribute embeddings looked up).
/// A disabled branch has an empty context list.
struct Contexts {
  std::vector<Vec> semantic;
  std::vector<Vec> temporal;
  std::vector<Vec> motion;
  std::vector<TokenId> attribute_ids;
};

Contexts make_contexts(const FeatureSet& features, const ModelParams& params,
                       const ModelConfig& config);

struct AttentionResult {
  Vec weights;  // empty when the branch is disabled
  Vec output;
};

/// Row E[token].
Vec embed(const Mat& embedding, TokenId token);

/// Bilinear soft attention: e_i = queryᵀ U c_i, α = softmax(e), y = Σ α_i c_i.
AttentionResult attend(std::span<const double> query, std::span<const Vec> contexts, const Mat& U);

struct LstmTrace {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g;
  Vec c;
  Vec c_out;  // c or tanh(c), whichever multiplies o
  Vec h;
};

LstmTrace lstm_step(std::span<const double> x, std::span<const double> h_prev,
                    std::span<const double> c_prev, const ModelParams& params,
                    bool cell_output_tanh = false);

struct FusionTrace {
  Vec z;    // concatenated, importance-scaled input
  Vec out;  // φ(W z + b), before dropout
};

/// Input multimodal layer. An empty mask means no dropout.
Vec fuse_input(std::span<const double> x, std::span<const double> semantic,
               std::span<const double> temporal, std::span<const double> motion,
               const ModelParams& params, Activation act, std::span<const double> dropout_mask = {});

/// Output multimodal layer, width d_e.
Vec fuse_output(std::span<const double> h, std::span<const double> semantic,
                std::span<const double> temporal, std::span<const double> motion,
                const ModelParams& params, Activation act,
                std::span<const double> dropout_mask = {});

/// p = softmax(E m).
Vec word_distribution(std::span<const double> m, const Mat& embedding);

struct InitTrace {
  Vec mean_semantic, mean_temporal, mean_motion;
  Vec z;   // [mean_s, mean_v, mean_f]
  Vec m0;  // init_W z
  LstmTrace lstm;
};

struct StepTrace {
  TokenId input = 0;
  TokenId target = 0;
  Vec x;
  AttentionResult in_semantic, in_temporal, in_motion;
  FusionTrace fuse_in;
  Vec drop_in;     // inverted-dropout mask, empty in eval
  Vec lstm_input;  // fuse_in.out after dropout
  LstmTrace lstm;
  AttentionResult out_semantic, out_temporal, out_motion;
  FusionTrace fuse_out;
  Vec drop_out;
  Vec projected;  // fuse_out.out after dropout
  Vec logits;
  Vec probs;
  double log_prob_target = 0.0;
};

struct ForwardTrace {
  Dims dims;
  ModelConfig config;
  Contexts contexts;
  InitTrace init;
  std::vector<StepTrace> steps;
};

struct DecoderState {
  Vec h;
  Vec c;
};

InitTrace init_state_trace(const Contexts& contexts, const ModelParams& params,
                           const ModelConfig& config);

/// (h₀, c₀) from the mean-pooled features.
DecoderState init_state(const FeatureSet& features, const ModelParams& params,
                        const ModelConfig& config);

/// One decoding step in eval mode: consumes `token`, advances `state`, returns log p(next).
Vec step_log_probs(DecoderState& state, TokenId token, const Contexts& contexts,
                   const ModelParams& params, const ModelConfig& config);

struct ForwardOptions {
  bool train = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when train && dropout > 0
};

struct ForwardResult {
  double loss = 0.0;  // −Σ log p(gold next token)
  ForwardTrace trace;
};

/// Teacher-forced pass over a BOS…EOS caption.
ForwardResult forward_caption(const FeatureSet& features, std::span<const TokenId> caption,
                              const ModelParams& params, const ModelConfig& config,
                              const ForwardOptions& options = {});

}  // namespace mfa
