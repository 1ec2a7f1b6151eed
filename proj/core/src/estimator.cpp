#include "precedent/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "precedent/model.hpp"

namespace precedent::estimator {

using nlohmann::json;

std::vector<double> EntropyEstimate::article_losses(std::size_t article) const {
  const std::size_t k_count = num_articles();
  if (article >= k_count) throw Error("article index out of range");
  std::vector<double> out(n_cases());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = per_case_article_loss[i * k_count + article];
  }
  return out;
}

EntropyEstimate estimate_from_losses(bundles::Variant variant,
                                     std::vector<std::string> case_ids,
                                     std::vector<double> per_case_article_loss,
                                     std::size_t num_articles) {
  if (num_articles == 0) throw Error("estimate needs at least one article");
  if (case_ids.empty()) throw Error("estimate needs at least one case");
  if (per_case_article_loss.size() != case_ids.size() * num_articles) {
    throw Error("loss matrix does not match the case and article counts");
  }
  EntropyEstimate e;
  e.variant = variant;
  e.case_ids = std::move(case_ids);
  e.per_case_article_loss = std::move(per_case_article_loss);
  e.per_article.assign(num_articles, 0.0);
  e.per_case_loss.assign(e.case_ids.size(), 0.0);
  const double n = static_cast<double>(e.case_ids.size());
  for (std::size_t i = 0; i < e.case_ids.size(); ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < num_articles; ++k) {
      const double l = e.per_case_article_loss[i * num_articles + k];
      if (!std::isfinite(l) || l < 0.0) {
        throw Error("loss for case '" + e.case_ids[i] + "' is negative or not finite");
      }
      row += l;
      e.per_article[k] += l;
    }
    e.per_case_loss[i] = row;
    e.total_nats += row;
  }
  e.total_nats /= n;
  for (double& v : e.per_article) v /= n;
  return e;
}

EntropyEstimate cross_entropy(const models::ScoreTable& scores,
                              const GoldOutcomes& gold,
                              std::span<const std::string> case_ids,
                              bundles::Variant variant) {
  const bundles::Variant variants[] = {variant};
  scores.require(case_ids, variants);
  const std::size_t k_count = scores.num_articles();
  std::vector<double> losses;
  losses.reserve(case_ids.size() * k_count);
  for (const auto& id : case_ids) {
    const auto it = gold.find(id);
    if (it == gold.end()) throw Error("no gold outcome for case '" + id + "'");
    const Outcome& o = it->second;
    if (o.size() != k_count) throw Error("gold outcome for '" + id + "' has wrong length");
    const auto& p = scores.at(id, variant);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double pk = models::clamp_probability(p[k]);
      losses.push_back(o[k] ? -std::log(pk) : -std::log1p(-pk));
    }
  }
  return estimate_from_losses(variant, {case_ids.begin(), case_ids.end()},
                              std::move(losses), k_count);
}

namespace {

void require_same_cases(const EntropyEstimate& a, const EntropyEstimate& b) {
  if (a.case_ids == b.case_ids) return;
  auto x = a.case_ids;
  auto y = b.case_ids;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x != y) throw Error("estimates cover different case sets");
}

double ratio_or_nan(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double mutual_information(const EntropyEstimate& base,
                          const EntropyEstimate& conditioned) {
  require_same_cases(base, conditioned);
  return base.total_nats - conditioned.total_nats;
}

double uncertainty_coefficient(double mi, const EntropyEstimate& base) {
  if (!(base.total_nats > 0.0)) throw Error("outcome already fully determined");
  return mi / base.total_nats;
}

std::vector<ArticleRow> per_article_report(const EntropyEstimate& base,
                                           const EntropyEstimate& goodhart,
                                           const EntropyEstimate& halsbury,
                                           const ArticleSet& articles) {
  require_same_cases(base, goodhart);
  require_same_cases(base, halsbury);
  const std::size_t k_count = base.num_articles();
  if (goodhart.num_articles() != k_count || halsbury.num_articles() != k_count ||
      articles.size() != k_count) {
    throw Error("article counts differ between estimates");
  }
  std::vector<ArticleRow> rows;
  rows.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    ArticleRow r;
    r.label = articles.label(k);
    r.h_facts = base.per_article[k];
    r.mi_goodhart = base.per_article[k] - goodhart.per_article[k];
    r.mi_halsbury = base.per_article[k] - halsbury.per_article[k];
    r.u_goodhart = ratio_or_nan(r.mi_goodhart, r.h_facts);
    r.u_halsbury = ratio_or_nan(r.mi_halsbury, r.h_facts);
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const EntropyEstimate& e) {
  json cases = json::array();
  const std::size_t k_count = e.num_articles();
  for (std::size_t i = 0; i < e.n_cases(); ++i) {
    cases.push_back(
        {{"id", e.case_ids[i]},
         {"loss", std::vector<double>(
                      e.per_case_article_loss.begin() + static_cast<std::ptrdiff_t>(i * k_count),
                      e.per_case_article_loss.begin() +
                          static_cast<std::ptrdiff_t>((i + 1) * k_count))}});
  }
  return json{{"variant", bundles::to_string(e.variant)},
              {"n_cases", e.n_cases()},
              {"total_nats", e.total_nats},
              {"per_article", e.per_article},
              {"cases", std::move(cases)}};
}

EntropyEstimate entropy_estimate_from_json(const json& j) {
  const auto variant = bundles::parse_variant(j.at("variant").get<std::string>());
  const std::size_t k_count = j.at("per_article").size();
  std::vector<std::string> ids;
  std::vector<double> losses;
  for (const auto& c : j.at("cases")) {
    ids.push_back(c.at("id").get<std::string>());
    const auto row = c.at("loss").get<std::vector<double>>();
    if (row.size() != k_count) throw Error("per-case loss row has wrong length");
    losses.insert(losses.end(), row.begin(), row.end());
  }
  return estimate_from_losses(variant, std::move(ids), std::move(losses), k_count);
}

}  // namespace precedent::estimator
