#include "precedent/bundles.hpp"

#include <fstream>

#include "precedent/error.hpp"

namespace precedent::bundles {

using nlohmann::json;

namespace {

// Appends up to `limit` tokens of `text` as one segment; returns the count.
std::size_t append_text(const std::string& source_id, SegmentKind kind,
                        std::string_view text, const Tokenizer& tok,
                        std::size_t limit, std::vector<TokenId>& tokens,
                        std::vector<Segment>& segments) {
  if (limit == 0) return 0;
  const auto spans = tok.tokenize_with_offsets(text, limit);
  if (spans.empty()) return 0;
  const std::size_t begin = tokens.size();
  for (const auto& s : spans) tokens.push_back(s.id);
  segments.push_back({source_id, kind, begin, tokens.size(),
                      std::string(text.substr(spans.front().begin,
                                              spans.back().end - spans.front().begin))});
  return spans.size();
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFactsOnly:
      return "facts";
    case Variant::kHalsbury:
      return "halsbury";
    case Variant::kGoodhart:
      return "goodhart";
  }
  return "facts";
}

Variant parse_variant(std::string_view name) {
  if (name == "facts") return Variant::kFactsOnly;
  if (name == "halsbury") return Variant::kHalsbury;
  if (name == "goodhart") return Variant::kGoodhart;
  throw Error("unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kFacts:
      return "facts";
    case SegmentKind::kArguments:
      return "arguments";
    case SegmentKind::kOutcomeMarker:
      return "outcome";
  }
  return "facts";
}

namespace {
SegmentKind parse_segment_kind(std::string_view name) {
  if (name == "facts") return SegmentKind::kFacts;
  if (name == "arguments") return SegmentKind::kArguments;
  if (name == "outcome") return SegmentKind::kOutcomeMarker;
  throw Error("unknown segment kind '" + std::string(name) + "'");
}
}  // namespace

std::size_t ConditioningBundle::precedent_length() const noexcept {
  std::size_t n = 0;
  for (const auto& s : segments) {
    if (s.source_id == case_id && s.kind == SegmentKind::kFacts) break;
    n = s.end;
  }
  return n;
}

ConditioningBundle build_facts_bundle(const corpus::Case& c, const Tokenizer& tok,
                                      const Budgets& budgets) {
  ConditioningBundle b;
  b.case_id = c.id;
  b.variant = Variant::kFactsOnly;
  if (append_text(c.id, SegmentKind::kFacts, c.facts, tok, budgets.facts, b.tokens,
                  b.segments) == 0) {
    throw Error("case '" + c.id + "' has empty facts");
  }
  return b;
}

PrecedentSegment build_precedent_segment(
    std::span<const corpus::Case* const> precedents, Variant variant,
    const Tokenizer& tok, std::size_t budget) {
  if (variant == Variant::kFactsOnly) {
    throw Error("precedent segments exist only for Halsbury and Goodhart");
  }
  if (precedents.empty()) throw Error("precedent segment needs at least one precedent");
  const bool halsbury = variant == Variant::kHalsbury;
  if (halsbury) {
    bool any = false;
    for (const auto* p : precedents) any = any || p->has_arguments();
    if (!any) throw Error("no argument material among the cited precedents");
  }

  PrecedentSegment seg;
  for (const auto* p : precedents) {
    if (seg.tokens.size() >= budget) break;
    if (halsbury && !p->has_arguments()) continue;

    std::vector<TokenId> marker{Tokenizer::kOutcome};
    for (std::size_t k = 0; k < p->outcome.size(); ++k) {
      if (p->outcome[k]) marker.push_back(tok.violation_marker(k));
    }
    const std::size_t room = budget - seg.tokens.size();
    if (marker.size() > room) marker.resize(room);
    std::string marker_text;
    for (const auto id : marker) {
      if (!marker_text.empty()) marker_text.push_back(' ');
      marker_text += tok.token(id);
    }
    const std::size_t begin = seg.tokens.size();
    seg.tokens.insert(seg.tokens.end(), marker.begin(), marker.end());
    seg.segments.push_back({p->id, SegmentKind::kOutcomeMarker, begin,
                            seg.tokens.size(), std::move(marker_text)});

    append_text(p->id, halsbury ? SegmentKind::kArguments : SegmentKind::kFacts,
                halsbury ? p->arguments : p->facts, tok,
                budget - seg.tokens.size(), seg.tokens, seg.segments);
  }
  return seg;
}

ConditioningBundle build_bundle(const corpus::Case& c,
                                const corpus::CitationGraph& graph,
                                const corpus::CaseIndex& index, Variant variant,
                                const Tokenizer& tok, const Budgets& budgets) {
  if (variant == Variant::kFactsOnly) return build_facts_bundle(c, tok, budgets);

  std::vector<const corpus::Case*> precedents;
  for (const auto& id : graph.precedents(c.id)) precedents.push_back(&index.at(id));

  auto seg = build_precedent_segment(precedents, variant, tok, budgets.precedents);
  ConditioningBundle b;
  b.case_id = c.id;
  b.variant = variant;
  b.tokens = std::move(seg.tokens);
  b.segments = std::move(seg.segments);
  if (append_text(c.id, SegmentKind::kFacts, c.facts, tok, budgets.facts, b.tokens,
                  b.segments) == 0) {
    throw Error("case '" + c.id + "' has empty facts");
  }
  return b;
}

json to_json(const ConditioningBundle& b, corpus::Split split,
             const Outcome& outcome) {
  json segments = json::array();
  for (const auto& s : b.segments) {
    segments.push_back({{"source_id", s.source_id},
                        {"kind", to_string(s.kind)},
                        {"begin", s.begin},
                        {"end", s.end},
                        {"text", s.text}});
  }
  return json{{"case_id", b.case_id},
              {"variant", to_string(b.variant)},
              {"split", corpus::to_string(split)},
              {"outcome", outcome},
              {"tokens", b.tokens},
              {"text_segments", std::move(segments)}};
}

BundleRecord bundle_from_json(const json& j) {
  BundleRecord r;
  r.bundle.case_id = j.at("case_id").get<std::string>();
  r.bundle.variant = parse_variant(j.at("variant").get<std::string>());
  r.bundle.tokens = j.at("tokens").get<std::vector<TokenId>>();
  for (const auto& s : j.at("text_segments")) {
    r.bundle.segments.push_back({s.at("source_id").get<std::string>(),
                                 parse_segment_kind(s.at("kind").get<std::string>()),
                                 s.at("begin").get<std::size_t>(),
                                 s.at("end").get<std::size_t>(),
                                 s.value("text", std::string())});
  }
  r.split = corpus::parse_split(j.at("split").get<std::string>());
  r.outcome = j.at("outcome").get<Outcome>();
  return r;
}

void write_bundles_jsonl(const std::filesystem::path& path,
                         std::span<const BundleRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r.bundle, r.split, r.outcome).dump() << '\n';
}

std::vector<BundleRecord> read_bundles_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open bundle file " + path.string());
  std::vector<BundleRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(bundle_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace precedent::bundles
