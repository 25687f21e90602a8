#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mfa/metrics.hpp"
#include "mfa/model.hpp"

namespace mfa {

/// Token <-> id table shared by caption words and attributes.
/// Ids 0..3 are reserved for <pad>, <bos>, <eos>, <unk>.
class Vocabulary {
 public:
  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(const std::string& token) const;
  /// Unknown tokens map to kUnk.
  TokenId encode_token(const std::string& token) const;
  /// Tokenizes and wraps in BOS ... EOS.
  std::vector<TokenId> encode_caption(const std::string& text) const;
  /// Drops BOS/EOS/PAD; everything else (UNK included) is rendered.
  Tokens decode(std::span<const TokenId> ids) const;

  /// FNV-1a 64 over the tokens in id order, newline separated.
  std::uint64_t hash() const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  friend Vocabulary build_vocab(std::span<const std::string>, std::span<const std::string>,
                                std::size_t);
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t min_count_ = 1;
};

/// Caption tokens with frequency >= min_count, plus every attribute token regardless of
/// count. Ids are assigned by (frequency desc, token asc); the result depends only on the
/// multiset of inputs.
Vocabulary build_vocab(std::span<const std::string> captions,
                       std::span<const std::string> attributes, std::size_t min_count);

}  // namespace mfa
