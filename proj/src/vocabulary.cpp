#include "mfa/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "mfa/errors.hpp"

namespace mfa {

namespace {
constexpr const char* kReservedTokens[kNumReserved] = {"<pad>", "<bos>", "<eos>", "<unk>"};
constexpr const char* kHeaderPrefix = "#min_count ";
}  // namespace

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) add(t);
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::encode_token(const std::string& token) const {
  return find(token).value_or(kUnk);
}

std::vector<TokenId> Vocabulary::encode_caption(const std::string& text) const {
  std::vector<TokenId> ids{kBos};
  for (const auto& t : tokenize(text)) ids.push_back(encode_token(t));
  ids.push_back(kEos);
  return ids;
}

Tokens Vocabulary::decode(std::span<const TokenId> ids) const {
  Tokens out;
  for (TokenId id : ids) {
    if (id == kBos || id == kEos || id == kPad) continue;
    out.push_back(token(id));
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const auto& t : tokens_) {
    for (char ch : t) mix(static_cast<unsigned char>(ch));
    mix('\n');
  }
  return h;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write vocabulary '" + path + "'");
  out << kHeaderPrefix << min_count_ << '\n';
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind(kHeaderPrefix, 0) != 0) {
    throw FormatError(path + ":1: missing '#min_count' header");
  }
  Vocabulary v;
  v.tokens_.clear();
  v.index_.clear();
  v.min_count_ = std::stoul(line.substr(std::string(kHeaderPrefix).size()));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw FormatError(path + ":" + std::to_string(lineno) + ": empty token");
    if (v.index_.count(line)) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate token '" + line + "'");
    }
    v.add(line);
  }
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (v.tokens_.size() <= i || v.tokens_[i] != kReservedTokens[i]) {
      throw FormatError(path + ": reserved tokens missing or out of order");
    }
  }
  return v;
}

Vocabulary build_vocab(std::span<const std::string> captions,
                       std::span<const std::string> attributes, std::size_t min_count) {
  std::map<std::string, std::size_t> caption_count;
  std::map<std::string, std::size_t> total;
  for (const auto& c : captions) {
    for (const auto& t : tokenize(c)) {
      ++caption_count[t];
      ++total[t];
    }
  }
  std::map<std::string, bool> is_attribute;
  for (const auto& a : attributes) {
    ++total[a];
    is_attribute[a] = true;
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : total) {
    const bool frequent = caption_count.count(tok) && caption_count[tok] >= min_count;
    if (frequent || is_attribute.count(tok)) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.min_count_ = min_count;
  for (const auto& [tok, n] : kept) v.add(tok);
  return v;
}

}  // namespace mfa
