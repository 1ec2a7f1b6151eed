#include "precedent/articles.hpp"

#include <fstream>
#include <sstream>

#include "precedent/error.hpp"

namespace precedent {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

ArticleSet::ArticleSet(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error("article set must contain at least one label");
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (labels_[k].empty()) throw Error("article label must be non-empty");
    if (!index_.emplace(labels_[k], k).second) {
      throw Error("duplicate article label '" + labels_[k] + "'");
    }
  }
}

ArticleSet ArticleSet::parse(std::string_view text) {
  std::vector<std::string> labels;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    if (!line.empty() && line.front() != '#') labels.emplace_back(line);
    pos = nl + 1;
  }
  return ArticleSet(std::move(labels));
}

ArticleSet ArticleSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open article list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ArticleSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write article list " + path.string());
  for (const auto& label : labels_) out << label << '\n';
}

std::optional<std::size_t> ArticleSet::index_of(std::string_view label) const {
  const auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> violated_labels(const Outcome& outcome,
                                         const ArticleSet& articles) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < outcome.size() && k < articles.size(); ++k) {
    if (outcome[k]) out.push_back(articles.label(k));
  }
  return out;
}

}  // namespace precedent
