#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"
#include "precedent/bundles.hpp"
#include "precedent/corpus.hpp"
#include "precedent/estimator.hpp"
#include "precedent/features.hpp"
#include "precedent/model.hpp"
#include "precedent/report.hpp"
#include "precedent/scores.hpp"
#include "precedent/tokenizer.hpp"

namespace precedent::pipeline {

inline constexpr const char* kOutputDirEnv = "PRECEDENT_OUTPUT_DIR";

enum class ScorerMode { kBuiltin, kExternal };
std::string_view to_string(ScorerMode mode);
ScorerMode parse_scorer_mode(std::string_view name);

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path articles;
  std::filesystem::path output_dir = "run";

  bundles::TokenizerRules tokenizer;
  models::FeatureSpec features;
  models::TrainingConfig training;
  bundles::Budgets budgets;

  std::uint64_t n_permutations = 10000;
  std::uint64_t permutation_seed = 0;
  double fdr_q = 0.05;
  bool per_article_tests = true;
  // Skip the permutation tests entirely (estimates only).
  bool significance = true;

  ScorerMode scorer = ScorerMode::kBuiltin;
  std::vector<std::filesystem::path> score_files;
  corpus::Split eval_split = corpus::Split::kTest;

  // Throws Error on non-positive budgets, an invalid feature spec or
  // q outside (0, 1).
  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // FNV-1a 64 of the canonical JSON without the output directory, as 16 hex
  // digits.
  std::string hash() const;
  nlohmann::json seeds() const;
};

// `requested` unless the output-dir environment variable is set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& requested);

struct IngestResult {
  ArticleSet articles;
  std::vector<corpus::Case> cases;
  corpus::CitationGraph graph;
  std::vector<corpus::Case> subcorpus;
  corpus::CorpusStats corpus_stats;
  corpus::CorpusStats subcorpus_stats;
  std::vector<std::string> diagnostics;
};

// Resolves citations and filters to cases with in-corpus precedents.
IngestResult ingest(std::vector<corpus::Case> cases, ArticleSet articles,
                    std::vector<std::string> diagnostics = {});
// Reads a JSONL file, or every *.jsonl file of a directory in name order.
IngestResult ingest(const RunConfig& config);

nlohmann::json stats_json(const IngestResult& ingest);

struct BundleSet {
  bundles::Tokenizer tokenizer;
  // Records per variant, aligned by position across variants.
  std::map<bundles::Variant, std::vector<bundles::BundleRecord>> records;
  std::vector<std::string> warnings;
};

// Vocabulary from the training-split texts of the whole corpus. A case whose
// Halsbury bundle cannot be built is dropped from every variant so that the
// three estimates cover the same cases.
BundleSet build_bundles(const IngestResult& ingest, const RunConfig& config);

struct TrainedVariant {
  models::OutcomeModel model;
  models::TrainingReport report;
};

// Trains one model per variant on the training split (validation split for
// early stopping) and scores the evaluation split.
models::ScoreTable train_and_score(const BundleSet& bundles, std::size_t num_articles,
                                   const RunConfig& config,
                                   std::map<bundles::Variant, TrainedVariant>* trained = nullptr);

models::ScoreTable score_records(const models::OutcomeModel& model,
                                 std::span<const bundles::BundleRecord> records,
                                 corpus::Split split);

// Evaluation cases and their gold outcomes, taken from the facts variant.
struct EvalSet {
  std::vector<std::string> case_ids;
  estimator::GoldOutcomes gold;
};
EvalSet eval_set(std::span<const bundles::BundleRecord> facts_records,
                 corpus::Split split);

// Cross-entropies, MI, U and, if enabled, permutation tests. Metadata carries
// the config hash, seeds and the precedent budget policy.
estimator::EstimateReport estimate(const models::ScoreTable& scores, const EvalSet& eval,
                                   const ArticleSet& articles, const RunConfig& config);
void add_run_metadata(estimator::EstimateReport& report, const RunConfig& config);

struct RunResult {
  corpus::CorpusStats subcorpus_stats;
  models::ScoreTable scores;
  estimator::EstimateReport report;
  std::vector<std::string> warnings;
};

// Whole builtin pipeline without touching the filesystem.
RunResult run_builtin(std::vector<corpus::Case> cases, const ArticleSet& articles,
                      const RunConfig& config);

// Report artifacts: report.json, report.txt, fig3.csv, permtest.csv.
void write_report_files(const std::filesystem::path& dir,
                        const estimator::EstimateReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace precedent::pipeline
