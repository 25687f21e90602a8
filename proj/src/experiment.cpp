#include "mfa/experiment.hpp"

#include <algorithm>
#include <cstdio>

#include "mfa/errors.hpp"

namespace mfa {

Corpus generate_corpus(const std::vector<VideoExample>& videos, const ModelParams& params,
                       const ModelConfig& config, const Vocabulary& vocab, const BeamOptions& beam) {
  Corpus corpus;
  corpus.reserve(videos.size());
  for (const auto& v : videos) {
    CorpusRecord r;
    r.id = v.id;
    r.candidate = join_tokens(vocab.decode(beam_search(v.features, params, config, beam).tokens));
    for (const auto& ref : v.references) r.references.push_back(join_tokens(ref));
    corpus.push_back(std::move(r));
  }
  return corpus;
}

ScoreReport score_videos(const std::vector<VideoExample>& videos, const ModelParams& params,
                         const ModelConfig& config, const Vocabulary& vocab, const BeamOptions& beam) {
  return evaluate_lenient(tokenize_corpus(generate_corpus(videos, params, config, vocab, beam)));
}

namespace {

ScoreReport mean_of(const std::vector<const ScoreReport*>& reports) {
  ScoreReport m;
  for (const auto* r : reports) {
    for (int n = 0; n < 4; ++n) m.bleu[n] += r->bleu[n];
    m.meteor_lite += r->meteor_lite;
    m.cider += r->cider;
    m.rouge_l += r->rouge_l;
  }
  const double inv = 1.0 / static_cast<double>(reports.size());
  for (double& b : m.bleu) b *= inv;
  m.meteor_lite *= inv;
  m.cider *= inv;
  m.rouge_l *= inv;
  return m;
}

std::string table_header(const char* first) {
  std::string s = first;
  for (auto key : kMetricKeys) s += "\t" + std::string(key);
  return s + "\n";
}

std::string table_row(const std::string& label, const ScoreReport& r) {
  std::string s = label;
  char buf[32];
  for (auto key : kMetricKeys) {
    std::snprintf(buf, sizeof buf, "\t%.6f", r.get(key));
    s += buf;
  }
  return s + "\n";
}

BeamOptions beam_of(const TrainConfig& c) {
  BeamOptions b;
  b.beam_size = c.beam_size;
  b.max_len = c.max_len;
  return b;
}

}  // namespace

ScoreReport AblationReport::mean(const std::string& config) const {
  std::vector<const ScoreReport*> rs;
  for (const auto& r : runs) {
    if (r.config == config) rs.push_back(&r.test);
  }
  if (rs.empty()) throw ConfigError("ablation report has no runs for '" + config + "'");
  return mean_of(rs);
}

ScoreReport AblationReport::mean_noise(double noise) const {
  std::vector<const ScoreReport*> rs;
  for (const auto& r : noise_runs) {
    if (r.noise == noise) rs.push_back(&r.test);
  }
  if (rs.empty()) throw ConfigError("ablation report has no runs at noise " + std::to_string(noise));
  return mean_of(rs);
}

std::string AblationReport::config_table(const std::vector<std::string>& configs) const {
  std::string s = table_header("config");
  for (const auto& c : configs) s += table_row(c, mean(c));
  return s;
}

std::string AblationReport::noise_table(const std::vector<double>& noise) const {
  std::string s = table_header("noise");
  char buf[32];
  for (double p : noise) {
    std::snprintf(buf, sizeof buf, "%.2f", p);
    s += table_row(buf, mean_noise(p));
  }
  return s;
}

BranchMask ablation_branches(const std::string& name) {
  if (name == "TM-HQ" || name == "TM-P-NN") return BranchMask{true, true, true};
  if (name == "T" || name == "M" || name == "TM") return BranchMask::parse(name);
  throw ConfigError("unknown ablation configuration '" + name + "'");
}

Dataset ablation_view(const Dataset& base, const std::string& name, const NnPredictorOptions& predictor) {
  Dataset d = base;
  const BranchMask mask = ablation_branches(name);
  if (!mask.semantic) {
    clear_attributes(d.train);
    clear_attributes(d.validation);
    clear_attributes(d.test);
  } else if (name == "TM-P-NN") {
    for (auto* split : {&d.validation, &d.test}) {
      for (auto& v : *split) {
        set_attributes(v, predict_attributes_nn(v.features.temporal, base.train, predictor), d.vocab);
      }
    }
  }
  return d;
}

std::vector<NoisePoint> noise_sweep(const Dataset& data, const ModelParams& params,
                                    const ModelConfig& config, const BeamOptions& beam,
                                    const std::vector<double>& noise, std::uint64_t noise_seed,
                                    std::uint64_t seed_label) {
  std::vector<NoisePoint> out;
  for (double p : noise) {
    Rng rng(noise_seed);
    std::vector<VideoExample> test = data.test;
    for (auto& v : test) v.features.attributes = inject_noise(v.features.attributes, p, data.vocab, rng);
    out.push_back({p, seed_label, score_videos(test, params, config, data.vocab, beam)});
  }
  return out;
}

AblationReport run_ablation(const Dataset& data, const AblationOptions& options) {
  if (options.configs.empty()) throw ConfigError("ablate: no configurations requested");
  if (options.seeds.empty()) throw ConfigError("ablate: no seeds given");
  if (data.test.empty()) throw ConfigError("ablate: test split is empty");
  for (const auto& c : options.configs) ablation_branches(c);

  AblationReport report;
  const BeamOptions beam = beam_of(options.train);
  const bool need_hq = !options.noise.empty();
  std::vector<std::string> configs = options.configs;
  if (need_hq && std::find(configs.begin(), configs.end(), "TM-HQ") == configs.end()) {
    configs.push_back("TM-HQ");
  }

  for (std::uint64_t seed : options.seeds) {
    for (const auto& name : configs) {
      const Dataset view = ablation_view(data, name, options.predictor);
      TrainConfig cfg = options.train;
      cfg.seed = seed;
      cfg.model.branches = ablation_branches(name);
      TrainingSet ts;
      ts.vocab = &view.vocab;
      ts.train = view.train;
      ts.validation = view.validation;
      const TrainResult tr = train(ts, cfg);
      const bool requested =
          std::find(options.configs.begin(), options.configs.end(), name) != options.configs.end();
      if (requested) {
        report.runs.push_back({name, seed, score_videos(view.test, tr.best, cfg.model, view.vocab, beam),
                               tr.history.size()});
      }
      if (name == "TM-HQ" && need_hq) {
        auto pts = noise_sweep(view, tr.best, cfg.model, beam, options.noise, options.noise_seed + seed, seed);
        report.noise_runs.insert(report.noise_runs.end(), pts.begin(), pts.end());
      }
    }
  }
  return report;
}

}  // namespace mfa
