#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"
#include "precedent/error.hpp"

namespace precedent::corpus {

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };
inline constexpr std::size_t kNumSplits = 3;

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct Case {
  std::string id;
  std::string facts;
  // Empty when the source document has no arguments section.
  std::string arguments;
  Outcome outcome;
  // Raw citation strings, de-duplicated by normalized form, first occurrence
  // order.
  std::vector<std::string> cited_ids;
  Split split = Split::kTrain;

  bool has_arguments() const noexcept { return !arguments.empty(); }
};

// A document as it arrives from the scrape: unsplit body plus metadata.
struct RawDocument {
  std::string id;
  std::string body;
  std::vector<std::string> outcome_labels;
  std::vector<std::string> citations;
  Split split = Split::kTrain;
};

enum class SectionKind { kFacts, kArguments };

struct HeadingPattern {
  SectionKind kind;
  std::string pattern;  // ECMAScript regex, matched case-insensitively at
                        // the start of a line (leading blanks allowed)
};

struct SectionRules {
  std::vector<HeadingPattern> headings = {
      {SectionKind::kFacts, "THE FACTS"},
      {SectionKind::kArguments, "THE LAW"},
  };
};

// Half-open byte range into a document body.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

struct Sections {
  TextSpan facts;
  std::optional<TextSpan> arguments;
};

// Compiled form of SectionRules.
//
// For each kind the first matching heading line wins. A section runs from the
// end of its heading line to the start of the next chosen heading (or the end
// of the body) and is trimmed of surrounding whitespace, so the facts and
// arguments spans never overlap.
class SectionSplitter {
 public:
  explicit SectionSplitter(const SectionRules& rules = {});
  // Throws Error when no facts heading exists.
  Sections split(std::string_view body) const;

 private:
  struct Compiled;
  std::vector<std::pair<SectionKind, std::shared_ptr<const Compiled>>> rules_;
};

Sections split_sections(std::string_view body, const SectionRules& rules = {});

// Trim, case-fold and collapse internal whitespace.
std::string normalize_id(std::string_view id);

// Drops repeats (by normalized form), keeping the first occurrence.
std::vector<std::string> dedup_citations(std::span<const std::string> cites);

// Builds the outcome bit-vector; throws DocumentRejected on unknown labels.
Outcome encode_outcome(std::string_view case_id,
                       std::span<const std::string> labels,
                       const ArticleSet& articles);

// Throws DocumentRejected when the facts heading is missing, the facts
// section is empty, or an outcome label is not in `articles`.
Case parse_case(const RawDocument& doc, const ArticleSet& articles,
                const SectionSplitter& splitter);
Case parse_case(const RawDocument& doc, const ArticleSet& articles,
                const SectionRules& rules = {});

// Renders a case back into a raw document whose body uses the default
// headings. parse_case(to_raw_document(c)) reproduces the case.
RawDocument to_raw_document(const Case& c, const ArticleSet& articles);

struct CitationGraph {
  // case id -> resolved in-corpus precedent ids, citation order.
  std::unordered_map<std::string, std::vector<std::string>> edges;
  // case id -> normalized citation strings with no matching case.
  std::unordered_map<std::string, std::vector<std::string>> unresolved;

  const std::vector<std::string>& precedents(const std::string& id) const;
  std::size_t unresolved_count(const std::string& id) const;
};

// Citations are matched to case ids by normalized string equality.
// Self-citations are dropped. Throws Error on duplicate case ids.
CitationGraph resolve_citations(std::span<const Case> cases);

// Throws Error if an edge references an unknown id, a case cites itself, or a
// precedent list repeats an id.
void validate_graph(const CitationGraph& graph, std::span<const Case> cases);

// Cases with at least one resolved precedent. Throws Error if none remain.
std::vector<Case> filter_subcorpus(std::span<const Case> cases,
                                   const CitationGraph& graph);

struct CorpusStats {
  std::array<std::size_t, kNumSplits> documents{};
  std::size_t total_documents = 0;
  std::size_t in_corpus_links = 0;
  std::size_t in_corpus_types = 0;
  std::size_t out_of_corpus_links = 0;
  std::size_t out_of_corpus_types = 0;
  std::size_t cases_without_arguments = 0;
  std::vector<std::string> article_labels;
  std::vector<std::size_t> article_violations;

  std::size_t split_size(Split s) const {
    return documents[static_cast<std::size_t>(s)];
  }
};

CorpusStats corpus_stats(std::span<const Case> cases,
                         const CitationGraph& graph,
                         const ArticleSet& articles);
nlohmann::json to_json(const CorpusStats& stats);

// Lookup of cases by id over a borrowed case list.
class CaseIndex {
 public:
  CaseIndex() = default;
  explicit CaseIndex(std::span<const Case> cases);
  const Case* find(const std::string& id) const;
  const Case& at(const std::string& id) const;
  std::size_t size() const noexcept { return by_id_.size(); }

 private:
  std::unordered_map<std::string, const Case*> by_id_;
};

// JSONL input. Records are either raw ({"id","body",...}) or pre-split
// ({"id","facts","arguments","outcome","citations","split"}). Rejected
// records are skipped and described in `diagnostics`.
struct ReadResult {
  std::vector<Case> cases;
  std::vector<std::string> diagnostics;
};
ReadResult read_cases_jsonl(const std::filesystem::path& path,
                            const ArticleSet& articles,
                            const SectionRules& rules = {});
ReadResult parse_cases_jsonl(std::istream& in, const ArticleSet& articles,
                             const SectionRules& rules = {});

// Writes the pre-split form.
void write_cases_jsonl(const std::filesystem::path& path,
                       std::span<const Case> cases, const ArticleSet& articles);
void write_raw_jsonl(const std::filesystem::path& path,
                     std::span<const RawDocument> docs);

}  // namespace precedent::corpus
