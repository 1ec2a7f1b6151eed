#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"
#include "precedent/bundles.hpp"
#include "precedent/scores.hpp"

namespace precedent::estimator {

using GoldOutcomes = std::unordered_map<std::string, Outcome>;

// Sample cross-entropy of one scored variant, in nats.
struct EntropyEstimate {
  bundles::Variant variant = bundles::Variant::kFactsOnly;
  std::vector<std::string> case_ids;
  std::vector<double> per_case_loss;
  // n_cases x K, row-major.
  std::vector<double> per_case_article_loss;
  std::vector<double> per_article;
  double total_nats = 0.0;

  std::size_t n_cases() const noexcept { return case_ids.size(); }
  std::size_t num_articles() const noexcept { return per_article.size(); }
  std::vector<double> article_losses(std::size_t article) const;
};

// Builds an estimate from per-case, per-article losses (row-major).
EntropyEstimate estimate_from_losses(bundles::Variant variant,
                                     std::vector<std::string> case_ids,
                                     std::vector<double> per_case_article_loss,
                                     std::size_t num_articles);

// Per-case loss -sum_k [o_k ln p_k + (1-o_k) ln(1-p_k)], averaged over
// `case_ids`. Throws CoverageError if a case has no scores and Error if a
// case has no gold outcome.
EntropyEstimate cross_entropy(const models::ScoreTable& scores,
                              const GoldOutcomes& gold,
                              std::span<const std::string> case_ids,
                              bundles::Variant variant);

// base.total - conditioned.total. Negative values are returned unchanged.
// Throws Error if the two estimates cover different case sets.
double mutual_information(const EntropyEstimate& base,
                          const EntropyEstimate& conditioned);

// mi / base.total. Throws Error when base.total is zero.
double uncertainty_coefficient(double mi, const EntropyEstimate& base);

struct ArticleRow {
  std::string label;
  double h_facts = 0.0;
  double mi_goodhart = 0.0;
  double u_goodhart = 0.0;  // NaN when h_facts is zero
  double mi_halsbury = 0.0;
  double u_halsbury = 0.0;
};

std::vector<ArticleRow> per_article_report(const EntropyEstimate& base,
                                           const EntropyEstimate& goodhart,
                                           const EntropyEstimate& halsbury,
                                           const ArticleSet& articles);

nlohmann::json to_json(const EntropyEstimate& e);
EntropyEstimate entropy_estimate_from_json(const nlohmann::json& j);

}  // namespace precedent::estimator
