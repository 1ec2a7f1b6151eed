#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "precedent/estimator.hpp"

namespace precedent::stats {

inline constexpr std::uint64_t kDefaultPermutations = 10000;
// Up to this many pairs the null distribution is enumerated exactly.
inline constexpr std::size_t kExactEnumerationLimit = 20;

struct PairedLosses {
  std::vector<std::string> case_ids;
  std::vector<double> losses_a;
  std::vector<double> losses_b;

  std::size_t size() const noexcept { return losses_a.size(); }
};

// Aligns per-case losses by case id. Throws Error if the case sets differ.
PairedLosses pair_losses(const estimator::EntropyEstimate& a,
                         const estimator::EntropyEstimate& b);
PairedLosses pair_article_losses(const estimator::EntropyEstimate& a,
                                 const estimator::EntropyEstimate& b,
                                 std::size_t article);

struct TestResult {
  double statistic = 0.0;  // mean(losses_a - losses_b)
  double p_value = 1.0;
  std::uint64_t n_permutations = 0;
  std::uint64_t seed = 0;
  bool exact = false;
  bool bh_rejected = false;
};

// Two-tailed paired permutation test with random sign flips of the per-case
// differences. For n <= kExactEnumerationLimit all 2^n sign patterns are
// enumerated and p is the exact fraction with |stat| >= |observed|;
// otherwise p = (1 + hits) / (n_permutations + 1). Permutation i draws its
// signs from a stream derived from (seed, i), so the result does not depend
// on evaluation order.
TestResult paired_permutation_test(const PairedLosses& pairs,
                                   std::uint64_t n_permutations = kDefaultPermutations,
                                   std::uint64_t seed = 0);

// Step-up false discovery rate control. Returns the rejection mask in the
// input order.
std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q);
void apply_benjamini_hochberg(std::span<TestResult> results, double q);

nlohmann::json to_json(const TestResult& r);
TestResult test_result_from_json(const nlohmann::json& j);

}  // namespace precedent::stats
