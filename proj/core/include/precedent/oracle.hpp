#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"
#include "precedent/corpus.hpp"

namespace precedent::oracle {

inline constexpr std::uint64_t kMaxEnumerationStates = 10'000'000;

// Generative model with exactly computable conditional entropies.
//
// Each article k owns a private block of `vocab_size` symbols. For every
// citing case the ruling bit o_k ~ Bernoulli(base_rate[k]) is drawn first;
// the case's facts then contain `doc_length` symbols of block k drawn i.i.d.
// from an emission distribution that depends on o_k. Each of the
// `precedents_per_case` cited precedents applies the same ruling: its outcome
// bit agrees with o_k with probability `outcome_agreement`, and its arguments
// and facts blocks are emitted given o_k with their own strengths.
//
// Emission with strength s: q(v | o) is proportional to
// exp(s * (2o - 1) * c_v) with c_v evenly spaced in [-1, 1]. Strength 0 is
// uninformative; an infinite strength puts all mass on the extreme symbol,
// which makes the outcome a deterministic function of the text.
struct SyntheticSpec {
  std::size_t vocab_size = 4;
  std::size_t doc_length = 4;
  std::size_t num_articles = 1;
  std::size_t precedents_per_case = 1;
  // One rate per article; a single value applies to all articles.
  std::vector<double> base_rate{0.5};
  double facts_strength = 1.0;
  // Strength shared between precedent arguments and precedent facts.
  double precedent_signal = 1.0;
  // +1 puts all of precedent_signal on the arguments, -1 all on the facts.
  double info_asymmetry = 0.0;
  double outcome_agreement = 0.5;
  std::uint64_t seed = 1;

  double argument_strength() const;
  double precedent_facts_strength() const;
  double base_rate_of(std::size_t article) const;

  // Joint states visited by exact_entropies for one article.
  std::uint64_t enumeration_states() const;
  // Throws Error on invalid parameters or when the enumeration bound is
  // exceeded.
  void validate() const;

  // key = value lines; '#' starts a comment. Keys match the field names
  // ("articles" is accepted for num_articles).
  static SyntheticSpec parse(std::string_view text);
  static SyntheticSpec load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// q(. | ruling) over the `vocab_size` symbols of one block.
std::vector<double> emission(std::size_t vocab_size, double strength, bool ruling);

// Exact p(o_k = 1 | symbol counts of block k in the current facts).
double facts_posterior(const SyntheticSpec& spec, std::size_t article,
                       std::span<const std::size_t> counts);

struct GroundTruth {
  double h_facts = 0.0;
  double h_goodhart = 0.0;
  double h_halsbury = 0.0;
  double mi_goodhart = 0.0;
  double mi_halsbury = 0.0;
  std::vector<double> per_article_h_facts;
  std::vector<double> per_article_h_goodhart;
  std::vector<double> per_article_h_halsbury;
};

// Exact conditional entropies in nats. Articles are independent by
// construction, so each is enumerated over its own joint space of symbol
// count vectors (sufficient statistics for the ruling) and the results are
// summed.
GroundTruth exact_entropies(const SyntheticSpec& spec);
nlohmann::json to_json(const GroundTruth& truth);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t total() const noexcept { return train + validation + test; }
};

// 80/10/10, remainder to train.
SplitSizes default_splits(std::size_t n_cases);

struct SyntheticCorpus {
  ArticleSet articles;
  // Citing cases first (train, validation, test), then all precedents.
  std::vector<corpus::Case> cases;
  corpus::CitationGraph graph;
};

// Word used for symbol `symbol` of article block `article`.
std::string symbol_word(std::size_t article, std::size_t symbol);

// Citing cases are sampled i.i.d.; case i of each split uses a generator
// seeded from (seed, split, i), so output is identical across runs.
SyntheticCorpus generate(const SyntheticSpec& spec, const SplitSizes& sizes);

// Raw documents (with section headings) for the whole corpus.
std::vector<corpus::RawDocument> to_raw_documents(const SyntheticCorpus& corpus);

}  // namespace precedent::oracle
