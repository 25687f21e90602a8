#include "mfa/synth.hpp"

#include <array>
#include <cstdio>
#include <filesystem>

#include "mfa/errors.hpp"
#include "mfa/features.hpp"

namespace mfa {

namespace {

constexpr std::array<const char*, 20> kSubjects = {
    "man",   "woman",  "boy",   "girl",  "dog",    "cat",   "horse", "bird",   "child", "chef",
    "player", "monkey", "baby", "panda", "rabbit", "tiger", "lion",  "cow",    "duck",  "fish"};
constexpr std::array<const char*, 20> kVerbs = {
    "running",  "jumping",  "dancing",  "cooking", "swimming", "playing", "riding",
    "walking",  "singing",  "eating",   "climbing", "driving", "sleeping", "reading",
    "painting", "fighting", "throwing", "slicing", "laughing", "talking"};
constexpr std::array<const char*, 20> kPlaces = {
    "road",  "stage", "kitchen", "pool",  "field", "park",  "beach", "street", "garden", "table",
    "hill",  "track", "river",   "room",  "forest", "yard", "bridge", "lake",  "floor",  "grass"};
constexpr std::array<const char*, 4> kPreps = {"on", "in", "near", "at"};

template <std::size_t N>
std::vector<std::string> names(const std::array<const char*, N>& base, std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::string s = base[i % N];
    if (i >= N) s += std::to_string(i / N);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Vec> centroids(std::size_t k, std::size_t dim, Rng& rng) {
  std::vector<Vec> c(k, Vec(dim));
  for (auto& v : c) {
    for (double& x : v) x = rng.normal();
  }
  return c;
}

std::vector<Vec> sample_frames(const Vec& centre, std::size_t count, double video_noise,
                               double frame_noise, Rng& rng) {
  Vec offset(centre.size());
  for (std::size_t k = 0; k < centre.size(); ++k) offset[k] = centre[k] + video_noise * rng.normal();
  std::vector<Vec> frames(count, Vec(centre.size()));
  for (auto& f : frames) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      // round through f32 so the in-memory dataset equals what the files hold
      f[k] = static_cast<float>(offset[k] + frame_noise * rng.normal());
    }
  }
  return frames;
}

std::string video_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "vid%04zu", i);
  return buf;
}

}  // namespace

Manifest SynthDataset::manifest() const {
  Manifest m;
  for (const auto& v : videos) m.videos.push_back(v.entry);
  return m;
}

SynthDataset synth_dataset(const SynthOptions& o) {
  if (o.n_videos < 3) throw ConfigError("synth: n_videos must be >= 3");
  if (o.vocab_size < 17) throw ConfigError("synth: vocab_size must be >= 17");
  if (o.temporal_dim == 0 || o.motion_dim == 0) throw ConfigError("synth: feature dims must be positive");
  if (o.min_frames == 0 || o.min_frames > o.max_frames || o.min_clips == 0 || o.min_clips > o.max_clips) {
    throw ConfigError("synth: frame/clip count ranges are empty");
  }
  if (o.captions_per_video == 0) throw ConfigError("synth: captions_per_video must be >= 1");
  if (!(o.temporal_noise >= 0.0) || !(o.motion_noise >= 0.0) || !(o.frame_noise >= 0.0)) throw ConfigError("synth: noise scales must be >= 0");

  // reserved 4 + {a, the, is} + 4 prepositions + subjects + verbs + places
  const std::size_t k = (o.vocab_size - 11) / 3;
  Rng rng(o.seed);
  SynthDataset ds;
  ds.subjects = names(kSubjects, k);
  ds.verbs = names(kVerbs, k);
  const auto places = names(kPlaces, k);
  const auto subject_centres = centroids(k, o.temporal_dim, rng);
  const auto verb_centres = centroids(k, o.motion_dim, rng);

  const std::size_t held = std::max<std::size_t>(1, o.n_videos / 10);
  std::vector<std::size_t> order(o.n_videos);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<Split> split(o.n_videos, Split::train);
  for (std::size_t i = 0; i < held; ++i) {
    split[order[i]] = Split::validation;
    split[order[held + i]] = Split::test;
  }

  for (std::size_t i = 0; i < o.n_videos; ++i) {
    const std::size_t s = i % k;
    const std::size_t v = rng.uniform_int(k);
    RawVideo raw;
    raw.entry.id = video_id(i);
    raw.entry.split = split[i];
    raw.entry.temporal_path = "features/" + raw.entry.id + ".temporal.mfaf";
    raw.entry.motion_path = "features/" + raw.entry.id + ".motion.mfaf";
    if (o.hq_attributes) raw.entry.attributes = {ds.subjects[s], ds.verbs[v]};
    for (std::size_t c = 0; c < o.captions_per_video; ++c) {
      const char* article = c % 2 == 0 ? "a" : "the";
      raw.entry.captions.push_back(std::string(article) + " " + ds.subjects[s] + " is " + ds.verbs[v] +
                                   " " + kPreps[v % kPreps.size()] + " the " + places[v]);
    }
    const std::size_t frames = o.min_frames + rng.uniform_int(o.max_frames - o.min_frames + 1);
    const std::size_t clips = o.min_clips + rng.uniform_int(o.max_clips - o.min_clips + 1);
    raw.temporal = sample_frames(subject_centres[s], frames, o.temporal_noise, o.frame_noise, rng);
    raw.motion = sample_frames(verb_centres[v], clips, o.motion_noise, o.frame_noise, rng);
    ds.latents.push_back({ds.subjects[s], ds.verbs[v]});
    ds.videos.push_back(std::move(raw));
  }
  return ds;
}

void write_dataset(const std::vector<RawVideo>& videos, const std::string& root) {
  namespace fs = std::filesystem;
  Manifest m;
  for (const auto& v : videos) {
    m.videos.push_back(v.entry);
    for (const auto* rel : {&v.entry.temporal_path, &v.entry.motion_path}) {
      fs::create_directories((fs::path(root) / *rel).parent_path());
    }
    write_features((fs::path(root) / v.entry.temporal_path).string(), v.temporal);
    write_features((fs::path(root) / v.entry.motion_path).string(), v.motion);
  }
  fs::create_directories(root);
  m.save((fs::path(root) / "manifest.json").string());
}

}  // namespace mfa
