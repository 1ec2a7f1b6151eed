#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "precedent/bundles.hpp"
#include "precedent/error.hpp"

namespace precedent::models {

// Raised when a score table does not cover the requested (case, variant)
// pairs.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<std::string> gaps)
      : Error(what), gaps_(std::move(gaps)) {}
  const std::vector<std::string>& gaps() const noexcept { return gaps_; }

 private:
  std::vector<std::string> gaps_;
};

// Per-case, per-variant article probabilities, clamped to [eps, 1 - eps].
class ScoreTable {
 public:
  using Key = std::pair<bundles::Variant, std::string>;

  explicit ScoreTable(std::size_t num_articles = 0) : num_articles_(num_articles) {}

  std::size_t num_articles() const noexcept { return num_articles_; }
  std::size_t size() const noexcept { return rows_.size(); }

  // Throws Error on a duplicate row, a length mismatch, or a probability that
  // is not a finite number in [0, 1].
  void insert(std::string case_id, bundles::Variant variant,
              std::vector<double> probs);

  const std::vector<double>* find(const std::string& case_id,
                                  bundles::Variant variant) const;
  const std::vector<double>& at(const std::string& case_id,
                                bundles::Variant variant) const;

  // "case_id/variant" for every requested pair with no row.
  std::vector<std::string> missing(std::span<const std::string> case_ids,
                                   std::span<const bundles::Variant> variants) const;
  // Throws CoverageError listing the gaps.
  void require(std::span<const std::string> case_ids,
               std::span<const bundles::Variant> variants) const;

  const std::map<Key, std::vector<double>>& rows() const noexcept { return rows_; }

 private:
  std::size_t num_articles_;
  std::map<Key, std::vector<double>> rows_;
};

// Score file: JSONL {"case_id": str, "variant": "facts|halsbury|goodhart",
// "probs": [K floats]}. Errors name the offending line.
ScoreTable parse_scores(std::istream& in, std::size_t num_articles,
                        const std::string& source = "<stream>");
ScoreTable parse_scores(std::istream& in, std::size_t num_articles,
                        ScoreTable table, const std::string& source);

// Parses `path` and checks coverage of every (case, variant) pair requested.
ScoreTable load_external_scores(const std::filesystem::path& path,
                                std::size_t num_articles,
                                std::span<const std::string> required_cases,
                                std::span<const bundles::Variant> required_variants);

void write_scores_jsonl(const std::filesystem::path& path, const ScoreTable& table);

}  // namespace precedent::models
