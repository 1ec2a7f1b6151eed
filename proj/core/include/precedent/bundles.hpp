#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "precedent/corpus.hpp"
#include "precedent/tokenizer.hpp"

namespace precedent::bundles {

enum class Variant { kFactsOnly, kHalsbury, kGoodhart };
inline constexpr Variant kAllVariants[] = {Variant::kFactsOnly,
                                           Variant::kGoodhart,
                                           Variant::kHalsbury};

// "facts", "halsbury", "goodhart": the names used in bundle and score files.
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

enum class SegmentKind { kFacts, kArguments, kOutcomeMarker };
std::string_view to_string(SegmentKind kind);

struct Segment {
  std::string source_id;
  SegmentKind kind;
  std::size_t begin;  // token positions, half-open
  std::size_t end;
  // Source text covered by the kept tokens (the marker line for outcomes).
  std::string text;
};

struct Budgets {
  std::size_t facts = 512;
  std::size_t precedents = 512;
  std::size_t combined() const noexcept { return facts + precedents; }
};

struct ConditioningBundle {
  std::string case_id;
  Variant variant = Variant::kFactsOnly;
  std::vector<TokenId> tokens;
  // Tiles `tokens` in order without gaps or overlap.
  std::vector<Segment> segments;

  // Number of leading tokens that come from precedents.
  std::size_t precedent_length() const noexcept;
};

struct PrecedentSegment {
  std::vector<TokenId> tokens;
  std::vector<Segment> segments;
};

ConditioningBundle build_facts_bundle(const corpus::Case& c,
                                      const Tokenizer& tok,
                                      const Budgets& budgets = {});

// For each precedent in citation order: <outcome>, one marker per violated
// article, then the precedent's arguments (Halsbury) or facts (Goodhart).
// The concatenation is cut at `budget` tokens. Halsbury skips precedents that
// have no arguments section; if none has one, throws Error.
PrecedentSegment build_precedent_segment(
    std::span<const corpus::Case* const> precedents, Variant variant,
    const Tokenizer& tok, std::size_t budget = 512);

// Precedent segment followed by the case's own facts. FactsOnly delegates to
// build_facts_bundle.
ConditioningBundle build_bundle(const corpus::Case& c,
                                const corpus::CitationGraph& graph,
                                const corpus::CaseIndex& index, Variant variant,
                                const Tokenizer& tok,
                                const Budgets& budgets = {});

// One line of the bundle JSONL export.
nlohmann::json to_json(const ConditioningBundle& b, corpus::Split split,
                       const Outcome& outcome);

struct BundleRecord {
  ConditioningBundle bundle;
  corpus::Split split = corpus::Split::kTrain;
  Outcome outcome;
};
BundleRecord bundle_from_json(const nlohmann::json& j);

void write_bundles_jsonl(const std::filesystem::path& path,
                         std::span<const BundleRecord> records);
std::vector<BundleRecord> read_bundles_jsonl(const std::filesystem::path& path);

}  // namespace precedent::bundles
