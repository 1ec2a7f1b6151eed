#include "precedent/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include "precedent/error.hpp"

namespace precedent::bundles {

using nlohmann::json;

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string marker_name(const std::string& label) { return "<viol:" + label + ">"; }

}  // namespace

std::vector<WordSpan> split_words(std::string_view text, bool lowercase,
                                  std::size_t max_words) {
  std::vector<WordSpan> out;
  std::size_t i = 0;
  while (i < text.size() && out.size() < max_words) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_word_byte(c)) {
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
    }
    std::string word(text.substr(i, j - i));
    if (lowercase) std::transform(word.begin(), word.end(), word.begin(), lower);
    out.push_back({std::move(word), i, j});
    i = j;
  }
  return out;
}

Tokenizer Tokenizer::from_vocabulary(std::vector<std::string> words,
                                     const ArticleSet& articles,
                                     const TokenizerRules& rules) {
  Tokenizer t;
  t.rules_ = rules;
  t.article_labels_ = articles.labels();
  t.tokens_.reserve(words.size() + articles.size() + 2);
  t.tokens_.push_back("<unk>");
  t.tokens_.push_back("<outcome>");
  for (const auto& label : articles.labels()) t.tokens_.push_back(marker_name(label));
  for (auto& w : words) t.tokens_.push_back(std::move(w));
  for (std::size_t i = 0; i < t.tokens_.size(); ++i) {
    if (!t.ids_.emplace(t.tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error("duplicate vocabulary entry '" + t.tokens_[i] + "'");
    }
  }
  return t;
}

Tokenizer Tokenizer::build(std::span<const std::string_view> texts,
                           const ArticleSet& articles,
                           const TokenizerRules& rules) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto text : texts) {
    for (auto& w : split_words(text, rules.lowercase)) ++counts[std::move(w.text)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [word, n] : counts) {
    if (n >= rules.min_frequency) kept.emplace_back(word, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [word, n] : kept) words.push_back(std::move(word));
  return from_vocabulary(std::move(words), articles, rules);
}

TokenId Tokenizer::lookup(std::string_view word) const {
  // Reserved names contain '<', which split_words never keeps inside a word.
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<TokenSpan> Tokenizer::tokenize_with_offsets(
    std::string_view text, std::size_t max_tokens) const {
  std::vector<TokenSpan> out;
  for (auto& w : split_words(text, rules_.lowercase, max_tokens)) {
    out.push_back({lookup(w.text), w.begin, w.end});
  }
  return out;
}

std::vector<TokenId> Tokenizer::tokenize(std::string_view text,
                                         std::size_t max_tokens) const {
  std::vector<TokenId> out;
  for (auto& w : split_words(text, rules_.lowercase, max_tokens)) {
    out.push_back(lookup(w.text));
  }
  return out;
}

TokenId Tokenizer::violation_marker(std::size_t article) const {
  if (article >= num_articles()) throw Error("article index out of range");
  return kFirstMarker + static_cast<TokenId>(article);
}

json Tokenizer::to_json() const {
  const auto first_word = kFirstMarker + num_articles();
  return json{
      {"rules",
       {{"lowercase", rules_.lowercase}, {"min_frequency", rules_.min_frequency}}},
      {"articles", article_labels_},
      {"vocabulary",
       std::vector<std::string>(tokens_.begin() + static_cast<std::ptrdiff_t>(first_word),
                                tokens_.end())},
  };
}

Tokenizer Tokenizer::from_json(const json& j) {
  TokenizerRules rules;
  rules.lowercase = j.at("rules").at("lowercase").get<bool>();
  rules.min_frequency = j.at("rules").at("min_frequency").get<std::size_t>();
  return from_vocabulary(j.at("vocabulary").get<std::vector<std::string>>(),
                         ArticleSet(j.at("articles").get<std::vector<std::string>>()),
                         rules);
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tokenizer " + path.string());
  return from_json(json::parse(in));
}

}  // namespace precedent::bundles
