#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "precedent/bundles.hpp"
#include "precedent/corpus.hpp"

namespace precedent::testing {

inline std::filesystem::path data_dir() { return PRECEDENT_TEST_DATA_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("precedent-" + tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline corpus::Case make_case(std::string id, std::string facts, std::string arguments,
                              Outcome outcome, std::vector<std::string> cites = {},
                              corpus::Split split = corpus::Split::kTrain) {
  corpus::Case c;
  c.id = std::move(id);
  c.facts = std::move(facts);
  c.arguments = std::move(arguments);
  c.outcome = std::move(outcome);
  c.cited_ids = std::move(cites);
  c.split = split;
  return c;
}

// `n` space-separated words drawn from w0..w(vocab-1).
inline std::string words(std::size_t n, std::size_t vocab = 10, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += "w" + std::to_string(rng() % vocab);
  }
  return out;
}

inline bundles::Tokenizer word_tokenizer(const ArticleSet& articles, std::size_t vocab = 10) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < vocab; ++i) v.push_back("w" + std::to_string(i));
  return bundles::Tokenizer::from_vocabulary(v, articles);
}

}  // namespace precedent::testing
