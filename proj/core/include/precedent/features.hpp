#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "precedent/bundles.hpp"

namespace precedent::models {

struct FeatureSpec {
  std::vector<int> ngram_orders{1, 2};
  unsigned hash_bits = 20;
  // Hash precedent tokens and current-facts tokens into separate feature
  // families, so the same word can carry different weights in the two roles.
  bool split_roles = true;
  // Scale each feature vector to unit Euclidean norm.
  bool l2_normalize = false;

  std::uint32_t dimension() const noexcept { return std::uint32_t{1} << hash_bits; }
  void validate() const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

nlohmann::json to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const nlohmann::json& j);

enum class FeatureRole : std::uint8_t { kCurrent = 1, kPrecedent = 2 };

// Indices sorted ascending and unique.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  double get(std::uint32_t index) const;
};

// FNV-1a over (role, n-gram ids), reduced to `hash_bits`.
std::uint32_t hash_ngram(FeatureRole role, std::span<const bundles::TokenId> ngram,
                         unsigned hash_bits);

// Counts of token n-grams. N-grams never span the boundary between the
// precedent segment and the current-case facts.
SparseVector featurize(const bundles::ConditioningBundle& bundle,
                       const FeatureSpec& spec);

}  // namespace precedent::models
