#include "precedent/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "precedent/error.hpp"

namespace precedent::stats {

using nlohmann::json;

namespace {

// SplitMix64 step; used as a counter-based stream so each permutation's signs
// depend only on (seed, permutation index).
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

PairedLosses align(const estimator::EntropyEstimate& a,
                   const estimator::EntropyEstimate& b,
                   const std::vector<double>& la, const std::vector<double>& lb) {
  if (a.n_cases() != b.n_cases()) throw Error("paired estimates differ in size");
  std::unordered_map<std::string, std::size_t> pos_b;
  pos_b.reserve(b.n_cases());
  for (std::size_t i = 0; i < b.n_cases(); ++i) pos_b.emplace(b.case_ids[i], i);
  PairedLosses p;
  p.case_ids = a.case_ids;
  p.losses_a = la;
  p.losses_b.reserve(a.n_cases());
  for (const auto& id : a.case_ids) {
    const auto it = pos_b.find(id);
    if (it == pos_b.end()) throw Error("case '" + id + "' missing from paired estimate");
    p.losses_b.push_back(lb[it->second]);
  }
  return p;
}

}  // namespace

PairedLosses pair_losses(const estimator::EntropyEstimate& a,
                         const estimator::EntropyEstimate& b) {
  return align(a, b, a.per_case_loss, b.per_case_loss);
}

PairedLosses pair_article_losses(const estimator::EntropyEstimate& a,
                                 const estimator::EntropyEstimate& b,
                                 std::size_t article) {
  return align(a, b, a.article_losses(article), b.article_losses(article));
}

TestResult paired_permutation_test(const PairedLosses& pairs,
                                   std::uint64_t n_permutations, std::uint64_t seed) {
  if (pairs.losses_a.size() != pairs.losses_b.size()) {
    throw Error("paired loss vectors differ in length");
  }
  if (pairs.losses_a.empty()) throw Error("permutation test needs at least one pair");
  if (n_permutations < 1) throw Error("permutation count must be at least 1");

  const std::size_t n = pairs.size();
  std::vector<double> diff(n);
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = pairs.losses_a[i] - pairs.losses_b[i];
    abs_sum += std::abs(diff[i]);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double observed = std::accumulate(diff.begin(), diff.end(), 0.0) * inv_n;
  // Ties up to summation-order rounding count as "at least as extreme".
  const double threshold = std::abs(observed) - 1e-12 * (abs_sum * inv_n + 1e-300);

  TestResult r;
  r.statistic = observed;
  r.seed = seed;

  if (n <= kExactEnumerationLimit) {
    const std::uint64_t patterns = std::uint64_t{1} << n;
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1u) ? -diff[i] : diff[i];
      if (std::abs(s * inv_n) >= threshold) ++hits;
    }
    r.exact = true;
    r.n_permutations = patterns;
    r.p_value = static_cast<double>(hits) / static_cast<double>(patterns);
    return r;
  }

  std::uint64_t hits = 0;
  for (std::uint64_t perm = 0; perm < n_permutations; ++perm) {
    std::uint64_t state = seed ^ (perm * 0xd1b54a32d192ed03ull);
    std::uint64_t bits = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = splitmix64(state);
      s += (bits & 1u) ? -diff[i] : diff[i];
      bits >>= 1;
    }
    if (std::abs(s * inv_n) >= threshold) ++hits;
  }
  r.n_permutations = n_permutations;
  r.p_value = static_cast<double>(hits + 1) / static_cast<double>(n_permutations + 1);
  return r;
}

std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error("BH level q must lie in (0, 1)");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t k_star = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double threshold = static_cast<double>(i + 1) * q / static_cast<double>(m);
    if (p_values[order[i]] <= threshold) k_star = i + 1;
  }
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < k_star; ++i) reject[order[i]] = true;
  return reject;
}

void apply_benjamini_hochberg(std::span<TestResult> results, double q) {
  std::vector<double> p;
  p.reserve(results.size());
  for (const auto& r : results) p.push_back(r.p_value);
  const auto reject = benjamini_hochberg(p, q);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].bh_rejected = reject[i];
}

json to_json(const TestResult& r) {
  return json{{"statistic", r.statistic},         {"p_value", r.p_value},
              {"n_permutations", r.n_permutations}, {"seed", r.seed},
              {"exact", r.exact},                 {"bh_rejected", r.bh_rejected}};
}

TestResult test_result_from_json(const json& j) {
  TestResult r;
  r.statistic = j.at("statistic").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.n_permutations = j.at("n_permutations").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.exact = j.value("exact", false);
  r.bh_rejected = j.value("bh_rejected", false);
  return r;
}

}  // namespace precedent::stats
