#include <unordered_set>

#include "precedent/corpus.hpp"

namespace precedent::corpus {

namespace {
const std::vector<std::string> kNoPrecedents;
}  // namespace

const std::vector<std::string>& CitationGraph::precedents(
    const std::string& id) const {
  const auto it = edges.find(id);
  return it == edges.end() ? kNoPrecedents : it->second;
}

std::size_t CitationGraph::unresolved_count(const std::string& id) const {
  const auto it = unresolved.find(id);
  return it == unresolved.end() ? 0 : it->second.size();
}

CitationGraph resolve_citations(std::span<const Case> cases) {
  std::unordered_map<std::string, const Case*> by_normalized;
  by_normalized.reserve(cases.size());
  for (const auto& c : cases) {
    if (!by_normalized.emplace(normalize_id(c.id), &c).second) {
      throw Error("duplicate case id '" + c.id + "'");
    }
  }

  CitationGraph graph;
  graph.edges.reserve(cases.size());
  for (const auto& c : cases) {
    auto& resolved = graph.edges[c.id];
    auto& missing = graph.unresolved[c.id];
    std::unordered_set<std::string> seen;
    const auto self = normalize_id(c.id);
    for (const auto& cite : c.cited_ids) {
      auto key = normalize_id(cite);
      if (key.empty() || key == self || !seen.insert(key).second) continue;
      if (const auto it = by_normalized.find(key); it != by_normalized.end()) {
        resolved.push_back(it->second->id);
      } else {
        missing.push_back(std::move(key));
      }
    }
  }
  return graph;
}

void validate_graph(const CitationGraph& graph, std::span<const Case> cases) {
  std::unordered_set<std::string> ids;
  for (const auto& c : cases) ids.insert(c.id);
  for (const auto& [id, precedents] : graph.edges) {
    if (!ids.contains(id)) throw Error("graph references unknown case '" + id + "'");
    std::unordered_set<std::string> seen;
    for (const auto& p : precedents) {
      if (p == id) throw Error("case '" + id + "' cites itself");
      if (!ids.contains(p)) {
        throw Error("case '" + id + "' cites unknown case '" + p + "'");
      }
      if (!seen.insert(p).second) {
        throw Error("case '" + id + "' lists precedent '" + p + "' twice");
      }
    }
  }
}

std::vector<Case> filter_subcorpus(std::span<const Case> cases,
                                   const CitationGraph& graph) {
  std::vector<Case> out;
  for (const auto& c : cases) {
    if (!graph.precedents(c.id).empty()) out.push_back(c);
  }
  if (out.empty()) {
    throw Error("no case cites an in-corpus precedent; nothing to analyze");
  }
  return out;
}

}  // namespace precedent::corpus
