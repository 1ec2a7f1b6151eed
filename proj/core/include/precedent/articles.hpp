#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace precedent {

// Outcome bit-vector: entry k is 1 when article k was found violated.
using Outcome = std::vector<std::uint8_t>;

// Ordered set of article labels. The order fixes the bit-vector indexing for
// the lifetime of a run.
class ArticleSet {
 public:
  ArticleSet() = default;
  explicit ArticleSet(std::vector<std::string> labels);

  // Newline-delimited labels; blank lines and '#' comments are skipped.
  static ArticleSet load(const std::filesystem::path& path);
  static ArticleSet parse(std::string_view text);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::string& label(std::size_t k) const { return labels_.at(k); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

  void save(const std::filesystem::path& path) const;

  friend bool operator==(const ArticleSet& a, const ArticleSet& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Labels of the violated articles in `outcome`, in article order.
std::vector<std::string> violated_labels(const Outcome& outcome,
                                         const ArticleSet& articles);

}  // namespace precedent
