#include <cmath>
#include <limits>

#include "mfa/errors.hpp"
#include "mfa/training.hpp"

namespace mfa {

ParamRange ParamRange::interval(double lo, double hi) {
  ParamRange r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

ParamRange ParamRange::one_of(std::vector<double> values) {
  ParamRange r;
  r.choices = std::move(values);
  return r;
}

void ParamRange::validate(const char* name) const {
  if (!choices.empty()) {
    for (double c : choices) {
      if (!std::isfinite(c)) throw ConfigError(std::string("search range '") + name + "' has a non-finite choice");
    }
    return;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw ConfigError(std::string("search range '") + name + "' is empty");
  }
}

double ParamRange::sample(Rng& rng) const {
  if (!choices.empty()) return choices[rng.uniform_int(choices.size())];
  return lo == hi ? lo : rng.uniform(lo, hi);
}

SearchResult random_search(const SearchSpace& space, std::size_t budget, const TrainingSet& data,
                           const TrainConfig& base, std::uint64_t seed, const TrainHooks& hooks) {
  if (budget == 0) throw ConfigError("random_search: budget must be >= 1");
  if (space.learning_rate) space.learning_rate->validate("learning_rate");
  if (space.dropout) space.dropout->validate("dropout");
  if (space.batch_size) space.batch_size->validate("batch_size");
  if (space.clip_norm) space.clip_norm->validate("clip_norm");

  Rng rng(seed);
  SearchResult out;
  bool have_best = false;
  for (std::size_t i = 0; i < budget; ++i) {
    SearchTrial trial;
    trial.index = i;
    trial.config = base;
    if (space.learning_rate) trial.config.learning_rate = space.learning_rate->sample(rng);
    if (space.dropout) trial.config.dropout = space.dropout->sample(rng);
    if (space.batch_size) {
      trial.config.batch_size = static_cast<std::size_t>(std::max(1.0, std::round(space.batch_size->sample(rng))));
    }
    if (space.clip_norm) trial.config.clip_norm = space.clip_norm->sample(rng);
    trial.config.validate();

    TrainResult tr;
    try {
      tr = train(data, trial.config, hooks);
      trial.score = tr.best_score;
      trial.validation_loss = tr.best_validation_loss;
      if (!std::isfinite(trial.score)) trial.diverged = true;
    } catch (const NumericError&) {
      trial.diverged = true;
    }
    if (trial.diverged) {
      trial.score = -std::numeric_limits<double>::infinity();
      trial.validation_loss = std::numeric_limits<double>::infinity();
    } else if (!std::isfinite(trial.validation_loss)) {
      trial.validation_loss = std::numeric_limits<double>::infinity();
    }

    const auto& best = have_best ? out.trials[out.best_index] : trial;
    const bool wins = !trial.diverged &&
                      (!have_best || trial.score > best.score ||
                       (trial.score == best.score && trial.validation_loss < best.validation_loss));
    out.trials.push_back(trial);
    if (wins) {
      out.best_index = i;
      out.best_config = trial.config;
      out.best_params = std::move(tr.best);
      have_best = true;
    }
  }
  if (!have_best) throw NumericError("random_search: every trial diverged");
  return out;
}

}  // namespace mfa
