#include "precedent/report.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace precedent::estimator {

using nlohmann::json;

namespace {

std::string format(const char* fmt, double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

double scale(Units u) { return u == Units::kBits ? 1.0 / std::numbers::ln2 : 1.0; }
const char* unit_name(Units u) { return u == Units::kBits ? "bits" : "nats"; }

// Left-aligned columns padded to the widest cell.
std::string render_columns(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 3, ' ');
    }
    out += line + '\n';
  }
  return out;
}

}  // namespace

EstimateReport make_report(EntropyEstimate facts, EntropyEstimate goodhart,
                           EntropyEstimate halsbury, const ArticleSet& articles) {
  EstimateReport r;
  r.mi_goodhart = mutual_information(facts, goodhart);
  r.mi_halsbury = mutual_information(facts, halsbury);
  r.u_goodhart = uncertainty_coefficient(r.mi_goodhart, facts);
  r.u_halsbury = uncertainty_coefficient(r.mi_halsbury, facts);
  r.articles = per_article_report(facts, goodhart, halsbury, articles);
  r.h_facts = std::move(facts);
  r.h_goodhart = std::move(goodhart);
  r.h_halsbury = std::move(halsbury);

  auto warn_negative = [&](const char* view, const std::string& where, double mi) {
    if (mi < 0.0) {
      std::ostringstream msg;
      msg << "negative MI estimate for " << view << where << ": " << mi
          << " nats (the conditioned model is worse than the facts-only model)";
      r.warnings.push_back(msg.str());
    }
  };
  warn_negative("goodhart", "", r.mi_goodhart);
  warn_negative("halsbury", "", r.mi_halsbury);
  for (const auto& row : r.articles) {
    warn_negative("goodhart", " on article " + row.label, row.mi_goodhart);
    warn_negative("halsbury", " on article " + row.label, row.mi_halsbury);
  }
  return r;
}

void add_significance(EstimateReport& report, const SignificanceConfig& config) {
  using bundles::Variant;
  struct Pair {
    const char* name;
    Variant a;
    Variant b;
    const EntropyEstimate* ea;
    const EntropyEstimate* eb;
  };
  const Pair pairs[] = {
      {"goodhart-vs-facts", Variant::kGoodhart, Variant::kFactsOnly, &report.h_goodhart,
       &report.h_facts},
      {"halsbury-vs-facts", Variant::kHalsbury, Variant::kFactsOnly, &report.h_halsbury,
       &report.h_facts},
      {"halsbury-vs-goodhart", Variant::kHalsbury, Variant::kGoodhart, &report.h_halsbury,
       &report.h_goodhart},
  };

  report.aggregate_tests.clear();
  for (const auto& p : pairs) {
    report.aggregate_tests.push_back(
        {p.name, p.a, p.b, "",
         stats::paired_permutation_test(stats::pair_losses(*p.ea, *p.eb),
                                        config.n_permutations, config.seed)});
  }
  std::vector<stats::TestResult> results;
  for (const auto& c : report.aggregate_tests) results.push_back(c.result);
  stats::apply_benjamini_hochberg(results, config.q);
  for (std::size_t i = 0; i < results.size(); ++i) report.aggregate_tests[i].result = results[i];

  report.article_tests.clear();
  if (!config.per_article) return;
  for (std::size_t k = 0; k < report.articles.size(); ++k) {
    for (const auto& p : {pairs[0], pairs[1]}) {
      report.article_tests.push_back(
          {p.name, p.a, p.b, report.articles[k].label,
           stats::paired_permutation_test(stats::pair_article_losses(*p.ea, *p.eb, k),
                                          config.n_permutations, config.seed)});
    }
  }
  results.clear();
  for (const auto& c : report.article_tests) results.push_back(c.result);
  stats::apply_benjamini_hochberg(results, config.q);
  for (std::size_t i = 0; i < results.size(); ++i) report.article_tests[i].result = results[i];
}

std::string render_summary_table(const EstimateReport& r, Units units) {
  const double s = scale(units);
  std::vector<std::vector<std::string>> rows{
      {"Model Input", std::string("H (") + unit_name(units) + ")", "MI", "U"},
      {"Facts", format("%.2f", r.h_facts.total_nats * s), "-", "-"},
      {"Goodhart", format("%.2f", r.h_goodhart.total_nats * s),
       format("%.2f", r.mi_goodhart * s), format("%.0f%%", r.u_goodhart * 100.0)},
      {"Halsbury", format("%.2f", r.h_halsbury.total_nats * s),
       format("%.2f", r.mi_halsbury * s), format("%.0f%%", r.u_halsbury * 100.0)},
  };
  return render_columns(rows);
}

std::string render_article_table(const EstimateReport& r, Units units) {
  const double s = scale(units);
  std::vector<std::vector<std::string>> rows{
      {"Art", std::string("H(O_k|F) (") + unit_name(units) + ")", "Goodhart MI",
       "Goodhart U", "Halsbury MI", "Halsbury U"}};
  for (const auto& a : r.articles) {
    rows.push_back({a.label, format("%.3f", a.h_facts * s), format("%.3f", a.mi_goodhart * s),
                    format("%.2f%%", a.u_goodhart * 100.0), format("%.3f", a.mi_halsbury * s),
                    format("%.2f%%", a.u_halsbury * 100.0)});
  }
  return render_columns(rows);
}

std::string render_significance(const EstimateReport& r) {
  std::vector<std::vector<std::string>> rows{
      {"Comparison", "Article", "Mean diff", "p", "Permutations", "BH reject"}};
  auto add = [&](const Comparison& c) {
    rows.push_back({c.name, c.article.empty() ? "all" : c.article,
                    format("%.4f", c.result.statistic), format("%.4g", c.result.p_value),
                    std::to_string(c.result.n_permutations) + (c.result.exact ? " (exact)" : ""),
                    c.result.bh_rejected ? "yes" : "no"});
  };
  for (const auto& c : r.aggregate_tests) add(c);
  for (const auto& c : r.article_tests) add(c);
  return render_columns(rows);
}

std::string render_text_report(const EstimateReport& r, Units units) {
  std::ostringstream out;
  out << "Cross-entropy, mutual information and uncertainty coefficient ("
      << r.h_facts.n_cases() << " evaluation cases)\n\n"
      << render_summary_table(r, units) << "\nPer article\n\n"
      << render_article_table(r, units);
  if (!r.aggregate_tests.empty()) {
    out << "\nPaired permutation tests (two-tailed; Benjamini-Hochberg applied "
           "separately to the aggregate and per-article families)\n\n"
        << render_significance(r);
  }
  if (!r.warnings.empty()) {
    out << "\nWarnings\n";
    for (const auto& w : r.warnings) out << "  - " << w << '\n';
  }
  return out.str();
}

std::string render_article_u_csv(const EstimateReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "article,u_goodhart,u_halsbury\n";
  for (const auto& a : r.articles) {
    out << a.label << ',' << a.u_goodhart << ',' << a.u_halsbury << '\n';
  }
  return out.str();
}

std::string render_tests_csv(const EstimateReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "comparison,article,statistic,p_value,rejected\n";
  auto add = [&](const Comparison& c) {
    out << c.name << ',' << (c.article.empty() ? "all" : c.article) << ','
        << c.result.statistic << ',' << c.result.p_value << ','
        << (c.result.bh_rejected ? "true" : "false") << '\n';
  };
  for (const auto& c : r.aggregate_tests) add(c);
  for (const auto& c : r.article_tests) add(c);
  return out.str();
}

json to_json(const Comparison& c) {
  return json{{"name", c.name},
              {"a", bundles::to_string(c.a)},
              {"b", bundles::to_string(c.b)},
              {"article", c.article},
              {"result", stats::to_json(c.result)}};
}

Comparison comparison_from_json(const json& j) {
  return {j.at("name").get<std::string>(),
          bundles::parse_variant(j.at("a").get<std::string>()),
          bundles::parse_variant(j.at("b").get<std::string>()),
          j.value("article", std::string()), stats::test_result_from_json(j.at("result"))};
}

json to_json(const EstimateReport& r) {
  json articles = json::array();
  for (const auto& a : r.articles) {
    articles.push_back({{"article", a.label},
                        {"h_facts", a.h_facts},
                        {"mi_goodhart", a.mi_goodhart},
                        {"u_goodhart", a.u_goodhart},
                        {"mi_halsbury", a.mi_halsbury},
                        {"u_halsbury", a.u_halsbury}});
  }
  json aggregate = json::array();
  for (const auto& c : r.aggregate_tests) aggregate.push_back(to_json(c));
  json per_article = json::array();
  for (const auto& c : r.article_tests) per_article.push_back(to_json(c));
  return json{{"units", "nats"},
              {"estimates",
               {{"facts", to_json(r.h_facts)},
                {"goodhart", to_json(r.h_goodhart)},
                {"halsbury", to_json(r.h_halsbury)}}},
              {"h", {{"facts", r.h_facts.total_nats},
                     {"goodhart", r.h_goodhart.total_nats},
                     {"halsbury", r.h_halsbury.total_nats}}},
              {"mi", {{"goodhart", r.mi_goodhart}, {"halsbury", r.mi_halsbury}}},
              {"u", {{"goodhart", r.u_goodhart}, {"halsbury", r.u_halsbury}}},
              {"articles", std::move(articles)},
              {"tests", {{"aggregate", std::move(aggregate)},
                         {"per_article", std::move(per_article)}}},
              {"warnings", r.warnings},
              {"metadata", r.metadata}};
}

EstimateReport report_from_json(const json& j, const ArticleSet& articles) {
  const auto& e = j.at("estimates");
  auto r = make_report(entropy_estimate_from_json(e.at("facts")),
                       entropy_estimate_from_json(e.at("goodhart")),
                       entropy_estimate_from_json(e.at("halsbury")), articles);
  if (const auto t = j.find("tests"); t != j.end()) {
    for (const auto& c : t->value("aggregate", json::array())) {
      r.aggregate_tests.push_back(comparison_from_json(c));
    }
    for (const auto& c : t->value("per_article", json::array())) {
      r.article_tests.push_back(comparison_from_json(c));
    }
  }
  r.metadata = j.value("metadata", json::object());
  return r;
}

}  // namespace precedent::estimator
