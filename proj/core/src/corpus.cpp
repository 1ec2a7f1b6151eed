#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <unordered_set>

#include "precedent/corpus.hpp"

namespace precedent::corpus {

using nlohmann::json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

TextSpan trim_span(std::string_view body, TextSpan span) {
  while (span.begin < span.end && is_space(body[span.begin])) ++span.begin;
  while (span.end > span.begin && is_space(body[span.end - 1])) --span.end;
  return span;
}

std::vector<std::string> string_list(const json& record, const char* key) {
  std::vector<std::string> out;
  const auto it = record.find(key);
  if (it == record.end() || it->is_null()) return out;
  if (!it->is_array()) {
    throw Error(std::string("field '") + key + "' must be an array of strings");
  }
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw Error(std::string("field '") + key + "' must contain strings only");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string string_field(const json& record, const char* key) {
  const auto it = record.find(key);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw Error(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "train") return Split::kTrain;
  if (lower == "validation" || lower == "valid" || lower == "dev") {
    return Split::kValidation;
  }
  if (lower == "test") return Split::kTest;
  throw Error("unknown split '" + std::string(name) + "'");
}

struct SectionSplitter::Compiled {
  std::regex re;
};

SectionSplitter::SectionSplitter(const SectionRules& rules) {
  for (const auto& h : rules.headings) {
    auto compiled = std::make_shared<Compiled>();
    try {
      compiled->re = std::regex("^[ \\t]*(?:" + h.pattern + ")(?![A-Za-z0-9])",
                                std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error("invalid heading pattern '" + h.pattern + "': " + e.what());
    }
    rules_.emplace_back(h.kind, std::move(compiled));
  }
}

Sections SectionSplitter::split(std::string_view body) const {
  struct Heading {
    SectionKind kind;
    std::size_t line_begin;
    std::size_t content_begin;
  };
  std::optional<Heading> facts;
  std::optional<Heading> arguments;

  std::size_t pos = 0;
  while (pos < body.size() && !(facts && arguments)) {
    auto nl = body.find('\n', pos);
    const std::size_t line_end = nl == std::string_view::npos ? body.size() : nl;
    const std::size_t next = nl == std::string_view::npos ? body.size() : nl + 1;
    const auto line = body.substr(pos, line_end - pos);
    for (const auto& [kind, compiled] : rules_) {
      auto& slot = kind == SectionKind::kFacts ? facts : arguments;
      if (slot) continue;
      if (std::regex_search(line.begin(), line.end(), compiled->re)) {
        slot = Heading{kind, pos, next};
        break;
      }
    }
    pos = next;
  }

  if (!facts) throw Error("no facts heading found");

  auto section_end = [&](const Heading& h) {
    std::size_t end = body.size();
    for (const auto* other : {&facts, &arguments}) {
      if (*other && (*other)->line_begin > h.line_begin) {
        end = std::min(end, (*other)->line_begin);
      }
    }
    return end;
  };

  Sections out;
  out.facts = trim_span(body, {facts->content_begin, section_end(*facts)});
  if (arguments) {
    out.arguments =
        trim_span(body, {arguments->content_begin, section_end(*arguments)});
  }
  return out;
}

Sections split_sections(std::string_view body, const SectionRules& rules) {
  return SectionSplitter(rules).split(body);
}

std::string normalize_id(std::string_view id) {
  std::string out;
  out.reserve(id.size());
  bool pending_space = false;
  for (char c : id) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> dedup_citations(std::span<const std::string> cites) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& c : cites) {
    auto key = normalize_id(c);
    if (key.empty()) continue;
    if (seen.insert(std::move(key)).second) out.push_back(c);
  }
  return out;
}

Outcome encode_outcome(std::string_view case_id,
                       std::span<const std::string> labels,
                       const ArticleSet& articles) {
  Outcome outcome(articles.size(), 0);
  for (const auto& label : labels) {
    const auto k = articles.index_of(label);
    if (!k) {
      throw DocumentRejected(std::string(case_id),
                             "unknown article label '" + label + "'");
    }
    outcome[*k] = 1;
  }
  return outcome;
}

Case parse_case(const RawDocument& doc, const ArticleSet& articles,
                const SectionSplitter& splitter) {
  if (doc.id.empty()) throw DocumentRejected(doc.id, "missing id");
  Sections sections;
  try {
    sections = splitter.split(doc.body);
  } catch (const Error& e) {
    throw DocumentRejected(doc.id, e.what());
  }
  if (sections.facts.size() == 0) {
    throw DocumentRejected(doc.id, "facts section is empty");
  }

  Case c;
  c.id = doc.id;
  c.facts = doc.body.substr(sections.facts.begin, sections.facts.size());
  if (sections.arguments) {
    c.arguments =
        doc.body.substr(sections.arguments->begin, sections.arguments->size());
  }
  c.outcome = encode_outcome(doc.id, doc.outcome_labels, articles);
  c.cited_ids = dedup_citations(doc.citations);
  c.split = doc.split;
  return c;
}

Case parse_case(const RawDocument& doc, const ArticleSet& articles,
                const SectionRules& rules) {
  return parse_case(doc, articles, SectionSplitter(rules));
}

RawDocument to_raw_document(const Case& c, const ArticleSet& articles) {
  RawDocument doc;
  doc.id = c.id;
  doc.body = "THE FACTS\n" + c.facts + "\n";
  if (c.has_arguments()) doc.body += "THE LAW\n" + c.arguments + "\n";
  doc.outcome_labels = violated_labels(c.outcome, articles);
  doc.citations = c.cited_ids;
  doc.split = c.split;
  return doc;
}

CorpusStats corpus_stats(std::span<const Case> cases,
                         const CitationGraph& graph,
                         const ArticleSet& articles) {
  CorpusStats stats;
  stats.article_labels = articles.labels();
  stats.article_violations.assign(articles.size(), 0);
  std::unordered_set<std::string> in_types;
  std::unordered_set<std::string> out_types;
  for (const auto& c : cases) {
    ++stats.documents[static_cast<std::size_t>(c.split)];
    ++stats.total_documents;
    if (!c.has_arguments()) ++stats.cases_without_arguments;
    for (std::size_t k = 0; k < c.outcome.size() && k < articles.size(); ++k) {
      stats.article_violations[k] += c.outcome[k];
    }
    const auto& resolved = graph.precedents(c.id);
    stats.in_corpus_links += resolved.size();
    in_types.insert(resolved.begin(), resolved.end());
    if (const auto it = graph.unresolved.find(c.id);
        it != graph.unresolved.end()) {
      stats.out_of_corpus_links += it->second.size();
      out_types.insert(it->second.begin(), it->second.end());
    }
  }
  stats.in_corpus_types = in_types.size();
  stats.out_of_corpus_types = out_types.size();
  return stats;
}

json to_json(const CorpusStats& stats) {
  json articles = json::object();
  for (std::size_t k = 0; k < stats.article_labels.size(); ++k) {
    articles[stats.article_labels[k]] = stats.article_violations[k];
  }
  return json{
      {"documents", stats.total_documents},
      {"splits",
       {{"train", stats.split_size(Split::kTrain)},
        {"validation", stats.split_size(Split::kValidation)},
        {"test", stats.split_size(Split::kTest)}}},
      {"in_corpus_links", stats.in_corpus_links},
      {"in_corpus_types", stats.in_corpus_types},
      {"out_of_corpus_links", stats.out_of_corpus_links},
      {"out_of_corpus_types", stats.out_of_corpus_types},
      {"cases_without_arguments", stats.cases_without_arguments},
      {"article_violations", articles},
  };
}

CaseIndex::CaseIndex(std::span<const Case> cases) {
  by_id_.reserve(cases.size());
  for (const auto& c : cases) by_id_.emplace(c.id, &c);
}

const Case* CaseIndex::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : it->second;
}

const Case& CaseIndex::at(const std::string& id) const {
  const auto* c = find(id);
  if (!c) throw Error("unknown case id '" + id + "'");
  return *c;
}

ReadResult parse_cases_jsonl(std::istream& in, const ArticleSet& articles,
                             const SectionRules& rules) {
  const SectionSplitter splitter(rules);
  ReadResult result;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const json record = json::parse(line);
      if (!record.is_object()) throw Error("record is not a JSON object");
      RawDocument doc;
      doc.id = string_field(record, "id");
      if (doc.id.empty()) throw Error("record has no id");
      doc.outcome_labels = string_list(record, "outcome");
      doc.citations = string_list(record, "citations");
      if (const auto split = string_field(record, "split"); !split.empty()) {
        doc.split = parse_split(split);
      }

      Case c;
      if (record.contains("body")) {
        doc.body = string_field(record, "body");
        c = parse_case(doc, articles, splitter);
      } else {
        c.id = doc.id;
        c.facts = string_field(record, "facts");
        c.arguments = string_field(record, "arguments");
        if (c.facts.find_first_not_of(" \t\r\n") == std::string::npos) {
          throw DocumentRejected(doc.id, "facts section is empty");
        }
        c.outcome = encode_outcome(doc.id, doc.outcome_labels, articles);
        c.cited_ids = dedup_citations(doc.citations);
        c.split = doc.split;
      }
      if (!ids.insert(c.id).second) {
        throw DocumentRejected(c.id, "duplicate case id");
      }
      result.cases.push_back(std::move(c));
    } catch (const json::exception& e) {
      result.diagnostics.push_back(where + "invalid JSON: " + e.what());
    } catch (const Error& e) {
      result.diagnostics.push_back(where + e.what());
    }
  }
  return result;
}

ReadResult read_cases_jsonl(const std::filesystem::path& path,
                            const ArticleSet& articles,
                            const SectionRules& rules) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_cases_jsonl(in, articles, rules);
}

void write_cases_jsonl(const std::filesystem::path& path,
                       std::span<const Case> cases,
                       const ArticleSet& articles) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& c : cases) {
    out << json{{"id", c.id},
                {"facts", c.facts},
                {"arguments", c.arguments},
                {"outcome", violated_labels(c.outcome, articles)},
                {"citations", c.cited_ids},
                {"split", to_string(c.split)}}
               .dump()
        << '\n';
  }
}

void write_raw_jsonl(const std::filesystem::path& path,
                     std::span<const RawDocument> docs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& d : docs) {
    out << json{{"id", d.id},
                {"body", d.body},
                {"outcome", d.outcome_labels},
                {"citations", d.citations},
                {"split", to_string(d.split)}}
               .dump()
        << '\n';
  }
}

}  // namespace precedent::corpus
