#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mfa/errors.hpp"
#include "mfa/experiment.hpp"
#include "mfa/training.hpp"

namespace mfa {

void TrainConfig::validate() const {
  model.dims.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (patience == 0) throw ConfigError("patience must be >= 1");
  if (beam_size == 0 || max_len == 0) throw ConfigError("beam_size and max_len must be >= 1");
  if (!(rms_decay >= 0.0 && rms_decay < 1.0) || !(rms_epsilon > 0.0)) {
    throw ConfigError("rms_decay must lie in [0, 1) and rms_epsilon must be positive");
  }
  if (std::find(kMetricKeys.begin(), kMetricKeys.end(), early_stop_metric) == kMetricKeys.end()) {
    throw ConfigError("unknown early_stop_metric '" + early_stop_metric + "'");
  }
}

namespace {

std::size_t predicted_tokens(const std::vector<VideoExample>& videos) {
  std::size_t n = 0;
  for (const auto& v : videos) {
    for (const auto& c : v.captions) n += c.size() - 1;
  }
  return n;
}

nlohmann::json history_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_token_loss"] = r.train_token_loss;
  j["validation_loss"] = r.validation_loss;
  for (auto key : kMetricKeys) j[std::string(key)] = r.validation.get(key);
  j["early_stop_value"] = r.early_stop_value;
  j["improved"] = r.improved;
  return j;
}

}  // namespace

double mean_token_loss(const std::vector<VideoExample>& videos, const ModelParams& params,
                       const ModelConfig& config) {
  double loss = 0.0;
  for (const auto& v : videos) {
    for (const auto& c : v.captions) loss += forward_caption(v.features, c, params, config).loss;
  }
  const std::size_t n = predicted_tokens(videos);
  return n == 0 ? 0.0 : loss / static_cast<double>(n);
}

double next_token_accuracy(const std::vector<VideoExample>& videos, const ModelParams& params,
                           const ModelConfig& config) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& v : videos) {
    for (const auto& c : v.captions) {
      const auto fwd = forward_caption(v.features, c, params, config);
      for (const auto& st : fwd.trace.steps) {
        const auto best = std::max_element(st.probs.begin(), st.probs.end()) - st.probs.begin();
        if (static_cast<TokenId>(best) == st.target) ++hits;
        ++total;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

TrainResult train(const TrainingSet& data, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (data.train.empty()) throw ConfigError("train: training split is empty");
  if (data.validation.empty()) throw ConfigError("train: validation split is empty");
  if (data.vocab == nullptr) throw ConfigError("train: no vocabulary given");
  if (data.vocab->size() != config.model.dims.vocab) {
    throw ConfigError("train: dims.vocab " + std::to_string(config.model.dims.vocab) +
                      " differs from vocabulary size " + std::to_string(data.vocab->size()));
  }

  Rng rng(config.seed);
  ModelParams params = data.initial_params ? *data.initial_params : ModelParams::initialized(config.model.dims, rng);
  if (!(params.dims == config.model.dims)) throw ConfigError("train: initial params have different dims");
  OptState opt = OptState::for_params(params, config.learning_rate, config.rms_decay, config.rms_epsilon);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t v = 0; v < data.train.size(); ++v) {
    for (std::size_t c = 0; c < data.train[v].captions.size(); ++c) pairs.emplace_back(v, c);
  }
  if (pairs.empty()) throw ConfigError("train: training split has no captions");
  const std::size_t train_tokens = predicted_tokens(data.train);

  std::ofstream history;
  if (!config.history_path.empty()) {
    history.open(config.history_path, std::ios::binary | std::ios::trunc);
    if (!history) throw FormatError("cannot write history '" + config.history_path + "'");
  }

  BeamOptions beam;
  beam.beam_size = config.beam_size;
  beam.max_len = config.max_len;
  ForwardOptions fopt;
  fopt.train = true;
  fopt.dropout = config.dropout;
  fopt.rng = &rng;

  TrainResult result;
  Gradients grads = ModelParams::zeros(params.dims);
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(pairs);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
      const std::size_t end = std::min(pairs.size(), start + config.batch_size);
      grads.set_zero();
      for (std::size_t i = start; i < end; ++i) {
        const auto& video = data.train[pairs[i].first];
        const auto& caption = video.captions[pairs[i].second];
        const auto fwd = forward_caption(video.features, caption, params, config.model, fopt);
        if (!std::isfinite(fwd.loss)) {
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_loss += fwd.loss;
        backward_accumulate(fwd.trace, caption, params, grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      grads.for_each_block([inv](std::string_view, Mat& m, BlockKind) {
        for (double& x : m.flat()) x *= inv;
      });
      clip_global_norm(grads, config.clip_norm);
      rmsprop_step(params, grads, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(pairs.size());
    rec.train_token_loss = epoch_loss / static_cast<double>(train_tokens);
    rec.validation_loss = mean_token_loss(data.validation, params, config.model);
    if (hooks.validation_metric) {
      rec.early_stop_value = hooks.validation_metric(params, epoch);
    } else {
      rec.validation = score_videos(data.validation, params, config.model, *data.vocab, beam);
      rec.early_stop_value = rec.validation.get(config.early_stop_metric);
    }
    rec.improved = epoch == 1 || rec.early_stop_value > result.best_score;
    if (rec.improved) {
      result.best = params;
      result.best_epoch = epoch;
      result.best_score = rec.early_stop_value;
      result.best_validation_loss = rec.validation_loss;
      stale = 0;
    } else {
      ++stale;
    }
    if (history.is_open()) {
      history << history_json(rec).dump() << '\n';
      history.flush();
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
    result.history.push_back(rec);
    if (stale >= config.patience) break;
  }
  return result;
}

}  // namespace mfa
