#include "mfa/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfa/checkpoint.hpp"
#include "mfa/embeddings.hpp"
#include "mfa/errors.hpp"
#include "mfa/experiment.hpp"
#include "mfa/synth.hpp"

namespace mfa {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Kind { integer, real, text, flag };

struct Setting {
  std::string key;
  Kind kind;
  json fallback;
  std::string help;
};

const std::vector<Setting> kDataSettings = {
    {"manifest", Kind::text, "", "dataset manifest (JSON)"},
    {"root", Kind::text, "", "dataset root; defaults to the manifest's directory"},
};

const std::vector<Setting> kTrainSettings = {
    {"seed", Kind::integer, 0, "random seed"},
    {"learning_rate", Kind::real, 1e-4, "RMSprop learning rate"},
    {"dropout", Kind::real, 0.5, "dropout on both multimodal layers"},
    {"batch_size", Kind::integer, 64, "captions per update"},
    {"max_epochs", Kind::integer, 100, "epoch limit"},
    {"patience", Kind::integer, 5, "epochs without improvement before stopping"},
    {"early_stop_metric", Kind::text, "meteor_lite", "validation metric for early stopping"},
    {"clip_norm", Kind::real, 5.0, "global gradient-norm clip (<= 0 disables)"},
    {"beam_size", Kind::integer, 5, "beam width"},
    {"max_len", Kind::integer, 30, "maximum generated tokens"},
    {"embed_dim", Kind::integer, 300, "word/attribute embedding width"},
    {"hidden_dim", Kind::integer, 512, "LSTM width"},
    {"branches", Kind::text, "TMS", "active branches: T, M, S combinations"},
    {"fusion", Kind::text, "identity", "multimodal layer activation"},
    {"cell_output_tanh", Kind::flag, false, "use h = o * tanh(c)"},
    {"min_count", Kind::integer, 1, "minimum caption-token frequency"},
    {"embeddings", Kind::text, "", "pretrained embedding text file"},
};

std::vector<Setting> join(std::initializer_list<const std::vector<Setting>*> parts,
                          std::vector<Setting> extra = {}) {
  std::vector<Setting> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

json parse_value(const Setting& s, const std::string& text) {
  try {
    std::size_t used = 0;
    switch (s.kind) {
      case Kind::integer: {
        if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
      }
      case Kind::real: {
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
      }
      default:
        return text;
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + text + "' for " + flag_name(s.key));
  }
}

json check_config_value(const Setting& s, const json& v) {
  const bool ok = (s.kind == Kind::integer && v.is_number_unsigned()) ||
                  (s.kind == Kind::real && v.is_number()) || (s.kind == Kind::text && v.is_string()) ||
                  (s.kind == Kind::flag && v.is_boolean());
  if (!ok) throw ConfigError("config key '" + s.key + "' has the wrong type");
  return s.kind == Kind::real ? json(v.get<double>()) : v;
}

// One subcommand: its settings and the storage CLI11 parses into.
class Command {
 public:
  Command(CLI::App& app, std::string name, std::string description, std::vector<Setting> settings)
      : settings_(std::move(settings)) {
    sub_ = app.add_subcommand(std::move(name), std::move(description));
    sub_->add_option("--config", config_path_, "JSON config file; flags override its values");
    for (const auto& s : settings_) {
      if (s.kind == Kind::flag) {
        options_[s.key] = sub_->add_flag(flag_name(s.key), flags_[s.key], s.help);
      } else {
        options_[s.key] = sub_->add_option(flag_name(s.key), texts_[s.key], s.help)
                              ->type_name(s.kind == Kind::integer ? "INT" : s.kind == Kind::real ? "REAL" : "TEXT");
      }
    }
  }

  bool chosen() const { return sub_->parsed(); }
  const std::string& name() const { return sub_->get_name(); }

  /// Defaults, then config file, then flags.
  json resolve() const {
    json cfg = json::object();
    for (const auto& s : settings_) cfg[s.key] = s.fallback;
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw ConfigError("cannot open config '" + config_path_ + "'");
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("config '" + config_path_ + "': " + e.what());
      }
      if (!file.is_object()) throw ConfigError("config '" + config_path_ + "' must be a JSON object");
      for (const auto& [key, value] : file.items()) {
        const auto it = std::find_if(settings_.begin(), settings_.end(),
                                     [&](const Setting& s) { return s.key == key; });
        if (it == settings_.end()) throw ConfigError("unknown config key '" + key + "'");
        cfg[key] = check_config_value(*it, value);
      }
    }
    for (const auto& s : settings_) {
      if (options_.at(s.key)->count() == 0) continue;
      cfg[s.key] = s.kind == Kind::flag ? json(flags_.at(s.key)) : parse_value(s, texts_.at(s.key));
    }
    return cfg;
  }

 private:
  CLI::App* sub_ = nullptr;
  std::vector<Setting> settings_;
  std::string config_path_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, bool> flags_;
  std::map<std::string, CLI::Option*> options_;
};

std::string text(const json& cfg, const char* key) { return cfg.at(key).get<std::string>(); }
std::size_t count(const json& cfg, const char* key) { return cfg.at(key).get<std::size_t>(); }
double real(const json& cfg, const char* key) { return cfg.at(key).get<double>(); }

std::string required(const json& cfg, const char* key) {
  std::string v = text(cfg, key);
  if (v.empty()) throw ConfigError(flag_name(key) + " is required");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* key) {
  std::vector<T> out;
  Setting setting{key, std::is_integral_v<T> ? Kind::integer : Kind::real, nullptr, ""};
  for (const auto& item : split_list(s)) out.push_back(parse_value(setting, item).get<T>());
  return out;
}

std::vector<RawVideo> load_videos(const json& cfg) {
  return load_raw_videos(required(cfg, "manifest"), text(cfg, "root"));
}

TrainConfig train_config(const json& cfg, const Vocabulary& vocab, const std::vector<RawVideo>& raw) {
  if (raw.empty()) throw ConfigError("manifest lists no videos");
  TrainConfig c;
  c.model.dims.vocab = vocab.size();
  c.model.dims.embed = count(cfg, "embed_dim");
  c.model.dims.hidden = count(cfg, "hidden_dim");
  c.model.dims.temporal = raw.front().temporal.front().size();
  c.model.dims.motion = raw.front().motion.front().size();
  c.model.fusion = parse_activation(text(cfg, "fusion"));
  c.model.cell_output_tanh = cfg.at("cell_output_tanh").get<bool>();
  c.model.branches = BranchMask::parse(text(cfg, "branches"));
  c.learning_rate = real(cfg, "learning_rate");
  c.dropout = real(cfg, "dropout");
  c.batch_size = count(cfg, "batch_size");
  c.max_epochs = count(cfg, "max_epochs");
  c.patience = count(cfg, "patience");
  c.early_stop_metric = text(cfg, "early_stop_metric");
  c.seed = cfg.at("seed").get<std::uint64_t>();
  c.clip_norm = real(cfg, "clip_norm");
  c.beam_size = count(cfg, "beam_size");
  c.max_len = count(cfg, "max_len");
  c.validate();
  return c;
}

BeamOptions beam_options(const json& cfg) {
  BeamOptions b;
  b.beam_size = count(cfg, "beam_size");
  b.max_len = count(cfg, "max_len");
  if (cfg.contains("length_penalty")) b.length_penalty = real(cfg, "length_penalty");
  if (b.beam_size == 0 || b.max_len == 0) throw ConfigError("beam_size and max_len must be >= 1");
  return b;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << body;
}

struct LoadedModel {
  Vocabulary vocab;
  Checkpoint checkpoint;
};

LoadedModel load_model(const std::string& dir) {
  LoadedModel m;
  m.vocab = Vocabulary::load((fs::path(dir) / "vocab.txt").string());
  m.checkpoint = load_checkpoint((fs::path(dir) / "model.ckpt").string(), m.vocab.hash());
  return m;
}

void check_feature_dims(const Dims& dims, const std::vector<RawVideo>& raw) {
  for (const auto& v : raw) {
    if (v.temporal.front().size() != dims.temporal || v.motion.front().size() != dims.motion) {
      throw ConsistencyError("video '" + v.entry.id + "' has feature widths that differ from the model");
    }
  }
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_attribute_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open attribute file '" + path + "'");
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.emplace_back(j.at("id").get<std::string>(), j.at("attributes").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

NnPredictorOptions predictor_options(const json& cfg) {
  NnPredictorOptions o;
  o.k = count(cfg, "nn_k");
  if (cfg.contains("top_m")) o.top_m = count(cfg, "top_m");
  if (cfg.contains("mean_pooled")) o.mean_pooled = cfg.at("mean_pooled").get<bool>();
  if (cfg.contains("pooled_votes")) o.per_slot = !cfg.at("pooled_votes").get<bool>();
  if (o.k == 0) throw ConfigError("--nn-k must be >= 1");
  return o;
}

void sort_by_id(std::vector<VideoExample>& videos) {
  std::sort(videos.begin(), videos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

int cmd_synth(const json& cfg, std::ostream& out) {
  SynthOptions o;
  o.seed = cfg.at("seed").get<std::uint64_t>();
  o.n_videos = count(cfg, "videos");
  o.vocab_size = count(cfg, "vocab_size");
  o.temporal_dim = count(cfg, "temporal_dim");
  o.motion_dim = count(cfg, "motion_dim");
  o.temporal_noise = real(cfg, "temporal_noise");
  o.motion_noise = real(cfg, "motion_noise");
  o.frame_noise = real(cfg, "frame_noise");
  o.captions_per_video = count(cfg, "captions");
  o.hq_attributes = !cfg.at("no_attributes").get<bool>();
  const SynthDataset ds = synth_dataset(o);
  const std::string root = required(cfg, "out");
  write_dataset(ds.videos, root);
  const auto n = ds.manifest().split_counts();
  out << "wrote " << ds.videos.size() << " videos to " << root << " (train " << n[0] << ", validation "
      << n[1] << ", test " << n[2] << ")\n";
  return 0;
}

int cmd_train(const json& cfg, std::ostream& out) {
  const auto raw = load_videos(cfg);
  Dataset ds = build_dataset(raw, count(cfg, "min_count"));
  TrainConfig tc = train_config(cfg, ds.vocab, raw);
  const fs::path dir = required(cfg, "out");
  fs::create_directories(dir);
  tc.history_path = (dir / "history.jsonl").string();

  TrainingSet ts;
  ts.vocab = &ds.vocab;
  ts.train = ds.train;
  ts.validation = ds.validation;
  const std::string emb = text(cfg, "embeddings");
  if (!emb.empty()) {
    Rng init_rng(tc.seed);
    ModelParams p = ModelParams::initialized(tc.model.dims, init_rng);
    const auto cov = load_embeddings(emb, ds.vocab, p.embedding);
    out << "embedding coverage " << cov.found << "/" << cov.total << "\n";
    ts.initial_params = std::move(p);
  }
  const auto n = [&] {
    Manifest m;
    for (const auto& v : raw) m.videos.push_back(v.entry);
    return m.split_counts();
  }();
  out << "splits: train " << n[0] << ", validation " << n[1] << ", test " << n[2] << "; vocabulary "
      << ds.vocab.size() << "\n";

  const TrainResult r = train(ts, tc);
  save_checkpoint((dir / "model.ckpt").string(), r.best, tc.model, ds.vocab.hash());
  ds.vocab.save((dir / "vocab.txt").string());
  write_text(dir / "config.json", cfg.dump(2) + "\n");
  out << "epochs " << r.history.size() << ", best epoch " << r.best_epoch << ", best "
      << tc.early_stop_metric << " " << r.best_score << "\n";
  return 0;
}

int cmd_generate(const json& cfg, std::ostream& out) {
  const LoadedModel m = load_model(required(cfg, "model"));
  const auto raw = load_videos(cfg);
  check_feature_dims(m.checkpoint.config.dims, raw);
  Dataset ds = build_dataset(raw, m.vocab);
  auto videos = ds.split(parse_split(text(cfg, "split")));
  const std::string mode = text(cfg, "attributes");
  if (mode == "none") {
    clear_attributes(videos);
  } else if (mode == "nn") {
    const auto opts = predictor_options(cfg);
    for (auto& v : videos) set_attributes(v, predict_attributes_nn(v.features.temporal, ds.train, opts), ds.vocab);
  } else if (mode != "hq") {
    throw ConfigError("--attributes must be hq, none or nn");
  }
  const std::string attr_file = text(cfg, "attributes_file");
  if (!attr_file.empty()) {
    for (const auto& [id, attrs] : read_attribute_file(attr_file)) {
      for (auto& v : videos) {
        if (v.id == id) set_attributes(v, attrs, ds.vocab);
      }
    }
  }
  sort_by_id(videos);
  const Corpus corpus = generate_corpus(videos, m.checkpoint.params, m.checkpoint.config, m.vocab, beam_options(cfg));
  write_corpus(required(cfg, "out"), corpus);
  out << "wrote " << corpus.size() << " captions to " << text(cfg, "out") << "\n";
  return 0;
}

int cmd_eval(const json& cfg, std::ostream& out) {
  const ScoreReport r = evaluate(read_corpus(required(cfg, "corpus")));
  const std::string body = r.to_text();
  if (!text(cfg, "out").empty()) write_text(text(cfg, "out"), body);
  out << body;
  return 0;
}

int cmd_predict_attrs(const json& cfg, std::ostream& out) {
  const auto raw = load_videos(cfg);
  Dataset ds = build_dataset(raw, std::size_t{1});
  auto videos = ds.split(parse_split(text(cfg, "split")));
  sort_by_id(videos);
  const auto opts = predictor_options(cfg);
  std::string lines;
  std::size_t agree = 0;
  std::size_t total = 0;
  for (const auto& v : videos) {
    const auto pred = predict_attributes_nn(v.features.temporal, ds.train, opts);
    json j;
    j["id"] = v.id;
    j["attributes"] = pred;
    lines += j.dump() + "\n";
    for (const auto& a : pred) {
      agree += std::count(v.attribute_tokens.begin(), v.attribute_tokens.end(), a) > 0 ? 1 : 0;
    }
    total += v.attribute_tokens.size();
  }
  write_text(required(cfg, "out"), lines);
  out << "predicted attributes for " << videos.size() << " videos";
  if (total > 0) out << "; " << agree << "/" << total << " match the manifest attributes";
  out << "\n";
  return 0;
}

int cmd_ablate(const json& cfg, std::ostream& out) {
  const auto raw = load_videos(cfg);
  const fs::path dir = required(cfg, "out");
  fs::create_directories(dir);
  const auto noise = parse_list<double>(text(cfg, "noise"), "noise");

  std::string noise_table;
  if (!text(cfg, "model").empty()) {
    const LoadedModel m = load_model(text(cfg, "model"));
    check_feature_dims(m.checkpoint.config.dims, raw);
    const Dataset ds = build_dataset(raw, m.vocab);
    if (noise.empty()) throw ConfigError("--noise lists no levels");
    AblationReport rep;
    rep.noise_runs = noise_sweep(ds, m.checkpoint.params, m.checkpoint.config, beam_options(cfg), noise,
                                 cfg.at("noise_seed").get<std::uint64_t>());
    noise_table = rep.noise_table(noise);
  } else {
    const Dataset ds = build_dataset(raw, count(cfg, "min_count"));
    AblationOptions o;
    o.train = train_config(cfg, ds.vocab, raw);
    o.configs = split_list(text(cfg, "configs"));
    o.seeds = parse_list<std::uint64_t>(text(cfg, "seeds"), "seeds");
    o.noise = noise;
    o.noise_seed = cfg.at("noise_seed").get<std::uint64_t>();
    o.predictor = predictor_options(cfg);
    const AblationReport rep = run_ablation(ds, o);
    const std::string table = rep.config_table(o.configs);
    write_text(dir / "ablation.tsv", table);
    out << table;
    if (!noise.empty()) noise_table = rep.noise_table(noise);
    std::string runs;
    for (const auto& r : rep.runs) {
      json j = json::parse(r.test.to_text());
      j["config"] = r.config;
      j["seed"] = r.seed;
      j["epochs"] = r.epochs;
      runs += j.dump() + "\n";
    }
    write_text(dir / "runs.jsonl", runs);
  }
  if (!noise_table.empty()) {
    write_text(dir / "noise.tsv", noise_table);
    out << noise_table;
  }
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-faceted attention video captioning"};
  app.name("mfacap");
  app.require_subcommand(1);

  const std::vector<Setting> synth_settings = {
      {"out", Kind::text, "", "output directory"},
      {"seed", Kind::integer, 0, "random seed"},
      {"videos", Kind::integer, 50, "number of videos"},
      {"vocab_size", Kind::integer, 60, "approximate vocabulary size"},
      {"temporal_dim", Kind::integer, 16, "temporal feature width"},
      {"motion_dim", Kind::integer, 16, "motion feature width"},
      {"temporal_noise", Kind::real, 0.5, "per-video offset scale of temporal frames"},
      {"motion_noise", Kind::real, 0.5, "per-video offset scale of motion clips"},
      {"frame_noise", Kind::real, 0.3, "per-frame jitter scale"},
      {"captions", Kind::integer, 1, "captions per video"},
      {"no_attributes", Kind::flag, false, "leave attributes empty"},
  };
  const std::vector<Setting> decode_settings = {
      {"beam_size", Kind::integer, 5, "beam width"},
      {"max_len", Kind::integer, 30, "maximum generated tokens"},
  };
  const std::vector<Setting> nn_settings = {
      {"nn_k", Kind::integer, 1, "neighbours per test frame"},
  };

  std::vector<std::unique_ptr<Command>> commands;
  commands.push_back(std::make_unique<Command>(app, "synth", "write a synthetic dataset", synth_settings));
  commands.push_back(std::make_unique<Command>(
      app, "train", "train a model", join({&kDataSettings, &kTrainSettings}, {{"out", Kind::text, "", "output directory"}})));
  commands.push_back(std::make_unique<Command>(
      app, "generate", "decode captions for a split",
      join({&kDataSettings, &decode_settings, &nn_settings},
           {{"model", Kind::text, "", "trained model directory"},
            {"split", Kind::text, "test", "train, validation or test"},
            {"out", Kind::text, "", "output corpus file"},
            {"length_penalty", Kind::real, 0.0, "length normalisation exponent"},
            {"attributes", Kind::text, "hq", "hq, none or nn"},
            {"attributes_file", Kind::text, "", "per-video attributes (JSON lines)"}})));
  commands.push_back(std::make_unique<Command>(
      app, "eval", "score a corpus file",
      std::vector<Setting>{{"corpus", Kind::text, "", "corpus file (JSON lines)"},
                           {"out", Kind::text, "", "report path"}}));
  commands.push_back(std::make_unique<Command>(
      app, "predict-attrs", "nearest-neighbour attribute prediction",
      join({&kDataSettings, &nn_settings},
           {{"split", Kind::text, "test", "split to predict"},
            {"out", Kind::text, "", "output attribute file (JSON lines)"},
            {"top_m", Kind::integer, 2, "attributes per video"},
            {"mean_pooled", Kind::flag, false, "compare mean-pooled vectors (fast mode)"},
            {"pooled_votes", Kind::flag, false, "vote over all attributes instead of per slot"}})));
  commands.push_back(std::make_unique<Command>(
      app, "ablate", "branch ablation and attribute-noise sweep",
      join({&kDataSettings, &kTrainSettings, &nn_settings},
           {{"out", Kind::text, "", "output directory"},
            {"configs", Kind::text, "M,TM,TM-HQ", "comma-separated configurations"},
            {"seeds", Kind::text, "0", "comma-separated seeds"},
            {"noise", Kind::text, "0,0.25,0.5,0.75,1", "comma-separated noise fractions"},
            {"noise_seed", Kind::integer, 1, "noise injection seed"},
            {"model", Kind::text, "", "trained model directory: run only the noise sweep"}})));

  json cfg;
  const Command* chosen = nullptr;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    for (const auto& c : commands) {
      if (c->chosen()) chosen = c.get();
    }
    cfg = chosen->resolve();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "mfacap: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "mfacap: " << e.what() << "\n";
    return 2;
  }

  err << "mfacap " << chosen->name() << ": resolved config " << cfg.dump() << "\n";
  try {
    const std::string& name = chosen->name();
    if (name == "synth") return cmd_synth(cfg, out);
    if (name == "train") return cmd_train(cfg, out);
    if (name == "generate") return cmd_generate(cfg, out);
    if (name == "eval") return cmd_eval(cfg, out);
    if (name == "predict-attrs") return cmd_predict_attrs(cfg, out);
    return cmd_ablate(cfg, out);
  } catch (const ConfigError& e) {
    err << "mfacap: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "mfacap: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mfa
