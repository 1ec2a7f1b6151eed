#include "precedent/scores.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "precedent/model.hpp"

namespace precedent::models {

using nlohmann::json;

void ScoreTable::insert(std::string case_id, bundles::Variant variant,
                        std::vector<double> probs) {
  if (probs.size() != num_articles_) {
    throw Error("score row for '" + case_id + "' has " + std::to_string(probs.size()) +
                " probabilities, expected " + std::to_string(num_articles_));
  }
  for (double& p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      std::ostringstream msg;
      msg << "probability " << p << " for '" << case_id << "' is outside [0,1]";
      throw Error(msg.str());
    }
    p = clamp_probability(p);
  }
  Key key{variant, std::move(case_id)};
  if (rows_.contains(key)) {
    throw Error("duplicate score row for '" + key.second + "' (" +
                std::string(bundles::to_string(variant)) + ")");
  }
  rows_.emplace(std::move(key), std::move(probs));
}

const std::vector<double>* ScoreTable::find(const std::string& case_id,
                                            bundles::Variant variant) const {
  const auto it = rows_.find(Key{variant, case_id});
  return it == rows_.end() ? nullptr : &it->second;
}

const std::vector<double>& ScoreTable::at(const std::string& case_id,
                                          bundles::Variant variant) const {
  const auto* row = find(case_id, variant);
  if (!row) {
    throw CoverageError("no scores for '" + case_id + "' (" +
                            std::string(bundles::to_string(variant)) + ")",
                        {case_id + "/" + std::string(bundles::to_string(variant))});
  }
  return *row;
}

std::vector<std::string> ScoreTable::missing(
    std::span<const std::string> case_ids,
    std::span<const bundles::Variant> variants) const {
  std::vector<std::string> gaps;
  for (const auto v : variants) {
    for (const auto& id : case_ids) {
      if (!find(id, v)) gaps.push_back(id + "/" + std::string(bundles::to_string(v)));
    }
  }
  return gaps;
}

void ScoreTable::require(std::span<const std::string> case_ids,
                         std::span<const bundles::Variant> variants) const {
  auto gaps = missing(case_ids, variants);
  if (gaps.empty()) return;
  std::string msg = "score table is missing " + std::to_string(gaps.size()) + " row(s):";
  for (std::size_t i = 0; i < gaps.size() && i < 20; ++i) msg += " " + gaps[i];
  if (gaps.size() > 20) msg += " ...";
  throw CoverageError(msg, std::move(gaps));
}

ScoreTable parse_scores(std::istream& in, std::size_t num_articles,
                        ScoreTable table, const std::string& source) {
  if (table.num_articles() != num_articles) {
    throw Error("score table article count mismatch");
  }
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      std::vector<double> probs;
      for (const auto& v : j.at("probs")) {
        if (!v.is_number()) throw Error("non-numeric probability");
        probs.push_back(v.get<double>());
      }
      table.insert(j.at("case_id").get<std::string>(),
                   bundles::parse_variant(j.at("variant").get<std::string>()),
                   std::move(probs));
    } catch (const std::exception& e) {
      throw Error(source + " row " + std::to_string(row) + ": " + e.what());
    }
  }
  return table;
}

ScoreTable parse_scores(std::istream& in, std::size_t num_articles,
                        const std::string& source) {
  return parse_scores(in, num_articles, ScoreTable(num_articles), source);
}

ScoreTable load_external_scores(const std::filesystem::path& path,
                                std::size_t num_articles,
                                std::span<const std::string> required_cases,
                                std::span<const bundles::Variant> required_variants) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open score file " + path.string());
  auto table = parse_scores(in, num_articles, path.string());
  table.require(required_cases, required_variants);
  return table;
}

void write_scores_jsonl(const std::filesystem::path& path, const ScoreTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [key, probs] : table.rows()) {
    out << json{{"case_id", key.second},
                {"variant", bundles::to_string(key.first)},
                {"probs", probs}}
               .dump()
        << '\n';
  }
}

}  // namespace precedent::models
