#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfa/dataset.hpp"
#include "mfa/metrics.hpp"
#include "mfa/model.hpp"

namespace mfa {

/// Exact gradient of forward_caption's loss with respect to every parameter.
Gradients backward(const ForwardTrace& trace, std::span<const TokenId> caption,
                   const ModelParams& params);

/// As backward, but adds into `grads` (which must be shaped like params).
void backward_accumulate(const ForwardTrace& trace, std::span<const TokenId> caption,
                         const ModelParams& params, Gradients& grads);

/// Rescales grads so their global L2 norm is at most max_norm. Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

struct OptState {
  ModelParams mean_square;
  double decay = 0.9;
  double epsilon = 1e-8;
  double learning_rate = 1e-4;

  static OptState for_params(const ModelParams& params, double learning_rate,
                             double decay = 0.9, double epsilon = 1e-8);
};

/// acc ← ρ·acc + (1−ρ)·g²;  θ ← θ − lr·g / sqrt(acc + ε)
/// Throws NumericError naming the block if any gradient entry is not finite.
void rmsprop_step(ModelParams& params, const Gradients& grads, OptState& opt);

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-4;
  double dropout = 0.5;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::string early_stop_metric = "meteor_lite";
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // <= 0 disables clipping
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  std::size_t beam_size = 5;
  std::size_t max_len = 30;
  std::string history_path;  // line-delimited JSON, one record per epoch; empty disables

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;        // mean −log-likelihood per caption
  double train_token_loss = 0.0;  // mean per predicted token
  double validation_loss = 0.0;   // mean per predicted token, eval mode
  ScoreReport validation;
  double early_stop_value = 0.0;
  bool improved = false;
};

struct TrainResult {
  ModelParams best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  double best_validation_loss = 0.0;
};

struct TrainingSet {
  const Vocabulary* vocab = nullptr;
  std::vector<VideoExample> train;
  std::vector<VideoExample> validation;
  /// Starting point; when absent parameters are initialised from config.seed.
  std::optional<ModelParams> initial_params;
};

struct TrainHooks {
  /// Replaces the beam-search validation metric (the early-stop value) when set.
  std::function<double(const ModelParams&, std::size_t epoch)> validation_metric;
  std::function<void(const EpochRecord&)> on_epoch;
};

TrainResult train(const TrainingSet& data, const TrainConfig& config, const TrainHooks& hooks = {});

/// Mean per-token negative log-likelihood over every caption, eval mode.
double mean_token_loss(const std::vector<VideoExample>& videos, const ModelParams& params,
                       const ModelConfig& config);

/// Fraction of teacher-forced positions where the argmax equals the gold next token.
double next_token_accuracy(const std::vector<VideoExample>& videos, const ModelParams& params,
                           const ModelConfig& config);

/// Either a closed interval [lo, hi] or a discrete set of choices, sampled uniformly.
struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> choices;

  static ParamRange interval(double lo, double hi);
  static ParamRange one_of(std::vector<double> values);
  double sample(Rng& rng) const;
  void validate(const char* name) const;
};

struct SearchSpace {
  std::optional<ParamRange> learning_rate;
  std::optional<ParamRange> dropout;
  std::optional<ParamRange> batch_size;
  std::optional<ParamRange> clip_norm;
};

struct SearchTrial {
  std::size_t index = 0;
  TrainConfig config;
  double score = 0.0;
  double validation_loss = 0.0;
  bool diverged = false;
};

struct SearchResult {
  std::size_t best_index = 0;
  TrainConfig best_config;
  ModelParams best_params;
  std::vector<SearchTrial> trials;
};

/// Samples `budget` configurations from `space` (fields not in the space keep their base
/// value), trains each and keeps the best validation early-stop score. Ties go to the lower
/// validation loss, then the earlier sample.
SearchResult random_search(const SearchSpace& space, std::size_t budget, const TrainingSet& data,
                           const TrainConfig& base, std::uint64_t seed,
                           const TrainHooks& hooks = {});

}  // namespace mfa
