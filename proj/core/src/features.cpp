#include "precedent/features.hpp"

#include <algorithm>
#include <cmath>

#include "precedent/error.hpp"

namespace precedent::models {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_byte(std::uint64_t& h, std::uint8_t b) {
  h ^= b;
  h *= kFnvPrime;
}

void count_ngrams(std::span<const bundles::TokenId> tokens, FeatureRole role,
                  const FeatureSpec& spec,
                  std::vector<std::pair<std::uint32_t, double>>& out) {
  for (const int n : spec.ngram_orders) {
    const auto order = static_cast<std::size_t>(n);
    if (tokens.size() < order) continue;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      out.emplace_back(hash_ngram(role, tokens.subspan(i, order), spec.hash_bits), 1.0);
    }
  }
}

}  // namespace

void FeatureSpec::validate() const {
  if (ngram_orders.empty()) throw Error("feature spec needs at least one n-gram order");
  for (const int n : ngram_orders) {
    if (n < 1) throw Error("n-gram orders must be positive");
  }
  if (hash_bits < 1 || hash_bits > 30) throw Error("hash_bits must be in [1, 30]");
}

json to_json(const FeatureSpec& spec) {
  return json{{"ngram_orders", spec.ngram_orders},
              {"hash_bits", spec.hash_bits},
              {"split_roles", spec.split_roles},
              {"l2_normalize", spec.l2_normalize}};
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec spec;
  spec.ngram_orders = j.value("ngram_orders", spec.ngram_orders);
  spec.hash_bits = j.value("hash_bits", spec.hash_bits);
  spec.split_roles = j.value("split_roles", spec.split_roles);
  spec.l2_normalize = j.value("l2_normalize", spec.l2_normalize);
  spec.validate();
  return spec;
}

double SparseVector::get(std::uint32_t index) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

std::uint32_t hash_ngram(FeatureRole role, std::span<const bundles::TokenId> ngram,
                         unsigned hash_bits) {
  std::uint64_t h = kFnvOffset;
  fnv_byte(h, static_cast<std::uint8_t>(role));
  fnv_byte(h, static_cast<std::uint8_t>(ngram.size()));
  for (const auto id : ngram) {
    const auto u = static_cast<std::uint32_t>(id);
    for (int shift = 0; shift < 32; shift += 8) {
      fnv_byte(h, static_cast<std::uint8_t>(u >> shift));
    }
  }
  // Fold the high bits in before masking.
  h ^= h >> 32;
  return static_cast<std::uint32_t>(h & ((std::uint64_t{1} << hash_bits) - 1));
}

SparseVector featurize(const bundles::ConditioningBundle& bundle,
                       const FeatureSpec& spec) {
  std::vector<std::pair<std::uint32_t, double>> raw;
  const std::span<const bundles::TokenId> tokens(bundle.tokens);
  const std::size_t split = std::min(bundle.precedent_length(), tokens.size());
  const auto precedent_role =
      spec.split_roles ? FeatureRole::kPrecedent : FeatureRole::kCurrent;
  count_ngrams(tokens.first(split), precedent_role, spec, raw);
  count_ngrams(tokens.subspan(split), FeatureRole::kCurrent, spec, raw);

  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector x;
  for (const auto& [index, value] : raw) {
    if (!x.indices.empty() && x.indices.back() == index) {
      x.values.back() += value;
    } else {
      x.indices.push_back(index);
      x.values.push_back(value);
    }
  }
  if (spec.l2_normalize && !x.empty()) {
    double norm = 0.0;
    for (const double v : x.values) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : x.values) v /= norm;
  }
  return x;
}

}  // namespace precedent::models
