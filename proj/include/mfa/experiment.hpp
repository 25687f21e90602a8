#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfa/attributes.hpp"
#include "mfa/dataset.hpp"
#include "mfa/decoding.hpp"
#include "mfa/metrics.hpp"
#include "mfa/training.hpp"

namespace mfa {

/// Beam-decodes every video; records keep the input order.
Corpus generate_corpus(const std::vector<VideoExample>& videos, const ModelParams& params,
                       const ModelConfig& config, const Vocabulary& vocab, const BeamOptions& beam);

/// generate_corpus followed by evaluate_lenient.
ScoreReport score_videos(const std::vector<VideoExample>& videos, const ModelParams& params,
                         const ModelConfig& config, const Vocabulary& vocab, const BeamOptions& beam);

/// Ablation configurations:
///   T, M, TM      visual branches only, attributes removed
///   TM-HQ         all branches, ground-truth attributes everywhere
///   TM-P-NN       trained like TM-HQ; validation/test attributes come from the NN predictor
inline constexpr const char* kAblationConfigs[] = {"T", "M", "TM", "TM-P-NN", "TM-HQ"};

struct AblationOptions {
  TrainConfig train;  // model.branches is overridden per configuration
  std::vector<std::string> configs = {"M", "TM", "TM-HQ"};
  std::vector<std::uint64_t> seeds = {0};
  /// Noise fractions applied to the test attributes of the TM-HQ model. Empty disables the sweep.
  std::vector<double> noise = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint64_t noise_seed = 1;
  NnPredictorOptions predictor;
};

struct AblationRow {
  std::string config;
  std::uint64_t seed = 0;
  ScoreReport test;
  std::size_t epochs = 0;
};

struct NoisePoint {
  double noise = 0.0;
  std::uint64_t seed = 0;
  ScoreReport test;
};

struct AblationReport {
  std::vector<AblationRow> runs;      // one per (config, seed)
  std::vector<NoisePoint> noise_runs; // one per (noise, seed)

  /// Mean test report of a configuration over seeds. Throws ConfigError if absent.
  ScoreReport mean(const std::string& config) const;
  ScoreReport mean_noise(double noise) const;

  /// Tab-separated tables with a header row; one row per configuration / noise level.
  std::string config_table(const std::vector<std::string>& configs) const;
  std::string noise_table(const std::vector<double>& noise) const;
};

/// Model config (branch mask) for an ablation name; throws ConfigError on unknown names.
BranchMask ablation_branches(const std::string& name);

/// Copies the dataset and rewrites attributes for the named configuration.
Dataset ablation_view(const Dataset& base, const std::string& name, const NnPredictorOptions& predictor);

/// Noise sweep on an already trained attribute model: for each p, test attributes are perturbed
/// with inject_noise(p) from Rng(noise_seed) and the test split is decoded and scored.
std::vector<NoisePoint> noise_sweep(const Dataset& data, const ModelParams& params,
                                    const ModelConfig& config, const BeamOptions& beam,
                                    const std::vector<double>& noise, std::uint64_t noise_seed,
                                    std::uint64_t seed_label = 0);

AblationReport run_ablation(const Dataset& data, const AblationOptions& options);

}  // namespace mfa
