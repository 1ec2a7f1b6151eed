#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"

namespace precedent::bundles {

using TokenId = std::int32_t;

struct TokenizerRules {
  bool lowercase = true;
  std::size_t min_frequency = 5;
};

// A token with its byte range in the source text.
struct TokenSpan {
  TokenId id;
  std::size_t begin;
  std::size_t end;
};

// Word-level tokenizer: maximal runs of letters/digits (any non-ASCII byte
// counts as a letter) are words, every other non-space character is a token
// on its own. Words seen fewer than `min_frequency` times map to <unk>.
//
// Id layout: 0 = <unk>, 1 = <outcome>, 2..K+1 = one violation marker per
// article, then the vocabulary by descending frequency (ties broken
// lexicographically).
class Tokenizer {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kOutcome = 1;
  static constexpr TokenId kFirstMarker = 2;

  Tokenizer() = default;

  static Tokenizer build(std::span<const std::string_view> texts,
                         const ArticleSet& articles,
                         const TokenizerRules& rules = {});
  // Vocabulary given explicitly, in id order (after the reserved ids).
  static Tokenizer from_vocabulary(std::vector<std::string> words,
                                   const ArticleSet& articles,
                                   const TokenizerRules& rules = {});

  std::vector<TokenId> tokenize(std::string_view text,
                                std::size_t max_tokens =
                                    std::numeric_limits<std::size_t>::max()) const;
  std::vector<TokenSpan> tokenize_with_offsets(
      std::string_view text,
      std::size_t max_tokens = std::numeric_limits<std::size_t>::max()) const;

  TokenId violation_marker(std::size_t article) const;
  std::size_t num_articles() const noexcept { return article_labels_.size(); }
  // Total id space including reserved ids.
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  TokenId lookup(std::string_view word) const;
  const TokenizerRules& rules() const noexcept { return rules_; }

  nlohmann::json to_json() const;
  static Tokenizer from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Tokenizer load(const std::filesystem::path& path);

 private:
  TokenizerRules rules_;
  std::vector<std::string> article_labels_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// The raw word/punctuation segmentation used by Tokenizer, with offsets.
struct WordSpan {
  std::string text;
  std::size_t begin;
  std::size_t end;
};
std::vector<WordSpan> split_words(std::string_view text, bool lowercase,
                                  std::size_t max_words =
                                      std::numeric_limits<std::size_t>::max());

}  // namespace precedent::bundles
