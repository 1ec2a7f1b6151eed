#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"
#include "precedent/estimator.hpp"
#include "precedent/stats.hpp"

namespace precedent::estimator {

struct Comparison {
  std::string name;  // e.g. "goodhart-vs-facts"
  bundles::Variant a;
  bundles::Variant b;
  std::string article;  // empty for aggregate comparisons
  stats::TestResult result;
};

struct SignificanceConfig {
  std::uint64_t n_permutations = stats::kDefaultPermutations;
  std::uint64_t seed = 0;
  double q = 0.05;
  bool per_article = true;
};

struct EstimateReport {
  EntropyEstimate h_facts;
  EntropyEstimate h_goodhart;
  EntropyEstimate h_halsbury;
  double mi_goodhart = 0.0;
  double mi_halsbury = 0.0;
  double u_goodhart = 0.0;
  double u_halsbury = 0.0;
  std::vector<ArticleRow> articles;
  // BH family: goodhart-vs-facts, halsbury-vs-facts, halsbury-vs-goodhart.
  std::vector<Comparison> aggregate_tests;
  // Separate BH family: each article against the facts-only baseline.
  std::vector<Comparison> article_tests;
  std::vector<std::string> warnings;
  nlohmann::json metadata = nlohmann::json::object();
};

// Computes MI, U and the per-article table; records a warning for every
// negative MI.
EstimateReport make_report(EntropyEstimate facts, EntropyEstimate goodhart,
                           EntropyEstimate halsbury, const ArticleSet& articles);

void add_significance(EstimateReport& report, const SignificanceConfig& config);

enum class Units { kNats, kBits };

// Aligned text table: one row per model input with H, MI and U. Nats and MI
// are shown with two decimals, U as a whole percentage.
std::string render_summary_table(const EstimateReport& report,
                                 Units units = Units::kNats);
// Per-article table: H(O_k|F), then MI and U for each precedent view.
std::string render_article_table(const EstimateReport& report,
                                 Units units = Units::kNats);
std::string render_significance(const EstimateReport& report);
std::string render_text_report(const EstimateReport& report,
                               Units units = Units::kNats);
// article,u_goodhart,u_halsbury
std::string render_article_u_csv(const EstimateReport& report);
// comparison,article,statistic,p_value,rejected
std::string render_tests_csv(const EstimateReport& report);

nlohmann::json to_json(const EstimateReport& report);
EstimateReport report_from_json(const nlohmann::json& j, const ArticleSet& articles);

nlohmann::json to_json(const Comparison& c);
Comparison comparison_from_json(const nlohmann::json& j);

}  // namespace precedent::estimator
