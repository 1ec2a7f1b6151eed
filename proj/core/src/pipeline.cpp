#include "precedent/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "precedent/error.hpp"

namespace precedent::pipeline {

using nlohmann::json;
using bundles::Variant;

std::string_view to_string(ScorerMode mode) {
  return mode == ScorerMode::kBuiltin ? "builtin" : "external";
}

ScorerMode parse_scorer_mode(std::string_view name) {
  if (name == "builtin") return ScorerMode::kBuiltin;
  if (name == "external") return ScorerMode::kExternal;
  throw Error("unknown scorer mode '" + std::string(name) + "' (builtin or external)");
}

void RunConfig::validate() const {
  if (budgets.facts == 0 || budgets.precedents == 0) {
    throw Error("truncation budgets must be positive");
  }
  features.validate();
  if (!(fdr_q > 0.0 && fdr_q < 1.0)) throw Error("FDR level q must lie in (0, 1)");
  if (training.epochs == 0) throw Error("epochs must be positive");
  if (!(training.learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (scorer == ScorerMode::kExternal && score_files.empty()) {
    throw Error("external scorer mode needs at least one score file");
  }
}

json RunConfig::to_json() const {
  std::vector<std::string> scores;
  for (const auto& p : score_files) scores.push_back(p.generic_string());
  return json{{"corpus", corpus.generic_string()},
              {"articles", articles.generic_string()},
              {"output_dir", output_dir.generic_string()},
              {"tokenizer",
               {{"lowercase", tokenizer.lowercase}, {"min_frequency", tokenizer.min_frequency}}},
              {"features", models::to_json(features)},
              {"training", models::to_json(training)},
              {"budgets", {{"facts", budgets.facts}, {"precedents", budgets.precedents}}},
              {"significance",
               {{"enabled", significance},
                {"n_permutations", n_permutations},
                {"seed", permutation_seed},
                {"q", fdr_q},
                {"per_article", per_article_tests}}},
              {"scorer", to_string(scorer)},
              {"score_files", scores},
              {"eval_split", corpus::to_string(eval_split)}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.corpus = j.value("corpus", std::string());
  c.articles = j.value("articles", std::string());
  c.output_dir = j.value("output_dir", std::string("run"));
  if (j.contains("tokenizer")) {
    const auto& t = j.at("tokenizer");
    c.tokenizer.lowercase = t.value("lowercase", c.tokenizer.lowercase);
    c.tokenizer.min_frequency = t.value("min_frequency", c.tokenizer.min_frequency);
  }
  if (j.contains("features")) c.features = models::feature_spec_from_json(j.at("features"));
  if (j.contains("training")) c.training = models::training_config_from_json(j.at("training"));
  if (j.contains("budgets")) {
    c.budgets.facts = j.at("budgets").value("facts", c.budgets.facts);
    c.budgets.precedents = j.at("budgets").value("precedents", c.budgets.precedents);
  }
  if (j.contains("significance")) {
    const auto& s = j.at("significance");
    c.significance = s.value("enabled", c.significance);
    c.n_permutations = s.value("n_permutations", c.n_permutations);
    c.permutation_seed = s.value("seed", c.permutation_seed);
    c.fdr_q = s.value("q", c.fdr_q);
    c.per_article_tests = s.value("per_article", c.per_article_tests);
  }
  c.scorer = parse_scorer_mode(j.value("scorer", std::string("builtin")));
  for (const auto& p : j.value("score_files", std::vector<std::string>{})) {
    c.score_files.emplace_back(p);
  }
  c.eval_split = corpus::parse_split(j.value("eval_split", std::string("test")));
  return c;
}

std::string RunConfig::hash() const {
  auto j = to_json();
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json RunConfig::seeds() const {
  return json{{"training", training.seed}, {"permutation", permutation_seed}};
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& requested) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return requested;
}

IngestResult ingest(std::vector<corpus::Case> cases, ArticleSet articles,
                    std::vector<std::string> diagnostics) {
  IngestResult r;
  r.articles = std::move(articles);
  r.cases = std::move(cases);
  r.diagnostics = std::move(diagnostics);
  r.graph = corpus::resolve_citations(r.cases);
  r.corpus_stats = corpus::corpus_stats(r.cases, r.graph, r.articles);
  r.subcorpus = corpus::filter_subcorpus(r.cases, r.graph);
  r.subcorpus_stats = corpus::corpus_stats(r.subcorpus, r.graph, r.articles);
  return r;
}

IngestResult ingest(const RunConfig& config) {
  if (config.articles.empty()) throw Error("no article list given");
  if (config.corpus.empty()) throw Error("no corpus given");
  auto articles = ArticleSet::load(config.articles);

  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(config.corpus)) {
    for (const auto& entry : std::filesystem::directory_iterator(config.corpus)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no .jsonl files in " + config.corpus.string());
  } else {
    files.push_back(config.corpus);
  }

  std::vector<corpus::Case> cases;
  std::vector<std::string> diagnostics;
  for (const auto& f : files) {
    auto read = corpus::read_cases_jsonl(f, articles);
    for (auto& c : read.cases) cases.push_back(std::move(c));
    for (auto& d : read.diagnostics) {
      diagnostics.push_back(files.size() > 1 ? f.filename().string() + " " + d : d);
    }
  }
  return ingest(std::move(cases), std::move(articles), std::move(diagnostics));
}

json stats_json(const IngestResult& r) {
  return json{{"corpus", corpus::to_json(r.corpus_stats)},
              {"subcorpus", corpus::to_json(r.subcorpus_stats)},
              {"rejected_documents", r.diagnostics.size()}};
}

BundleSet build_bundles(const IngestResult& ingest, const RunConfig& config) {
  BundleSet out;
  std::vector<std::string_view> texts;
  for (const auto& c : ingest.cases) {
    if (c.split != corpus::Split::kTrain) continue;
    texts.push_back(c.facts);
    if (c.has_arguments()) texts.push_back(c.arguments);
  }
  out.tokenizer = bundles::Tokenizer::build(texts, ingest.articles, config.tokenizer);

  const corpus::CaseIndex index(ingest.cases);
  for (const auto v : bundles::kAllVariants) out.records[v].reserve(ingest.subcorpus.size());

  std::size_t dropped = 0;
  std::size_t partial = 0;
  for (const auto& c : ingest.subcorpus) {
    std::vector<bundles::ConditioningBundle> built;
    try {
      for (const auto v : bundles::kAllVariants) {
        built.push_back(bundles::build_bundle(c, ingest.graph, index, v, out.tokenizer,
                                              config.budgets));
      }
    } catch (const Error& e) {
      ++dropped;
      if (dropped <= 20) out.warnings.push_back("case '" + c.id + "' dropped: " + e.what());
      continue;
    }
    for (const auto& id : ingest.graph.precedents(c.id)) {
      if (!index.at(id).has_arguments()) {
        ++partial;
        break;
      }
    }
    for (std::size_t i = 0; i < built.size(); ++i) {
      out.records[bundles::kAllVariants[i]].push_back({std::move(built[i]), c.split, c.outcome});
    }
  }
  if (dropped > 20) {
    out.warnings.push_back(std::to_string(dropped - 20) + " further cases dropped");
  }
  if (partial > 0) {
    out.warnings.push_back(std::to_string(partial) +
                           " cases cite precedents without an arguments section; those "
                           "precedents are left out of the Halsbury bundles");
  }
  if (out.records[Variant::kFactsOnly].empty()) throw Error("no case could be bundled");
  return out;
}

namespace {

std::vector<models::Example> examples_for(std::span<const bundles::BundleRecord> records,
                                          corpus::Split split,
                                          const models::FeatureSpec& spec) {
  std::vector<models::Example> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back({models::featurize(r.bundle, spec), r.outcome});
  }
  return out;
}

}  // namespace

models::ScoreTable score_records(const models::OutcomeModel& model,
                                 std::span<const bundles::BundleRecord> records,
                                 corpus::Split split) {
  models::ScoreTable table(model.num_articles());
  for (const auto& r : records) {
    if (r.split == split) {
      table.insert(r.bundle.case_id, r.bundle.variant, model.predict_proba(r.bundle));
    }
  }
  return table;
}

models::ScoreTable train_and_score(const BundleSet& bundles, std::size_t num_articles,
                                   const RunConfig& config,
                                   std::map<Variant, TrainedVariant>* trained) {
  models::ScoreTable table(num_articles);
  for (const auto v : bundles::kAllVariants) {
    const auto& records = bundles.records.at(v);
    const auto train_set = examples_for(records, corpus::Split::kTrain, config.features);
    if (train_set.empty()) throw Error("no training cases for the " +
                                       std::string(bundles::to_string(v)) + " model");
    const auto validation_set =
        examples_for(records, corpus::Split::kValidation, config.features);
    TrainedVariant tv;
    tv.model = models::train(train_set, validation_set, num_articles, config.features,
                             config.training, &tv.report);
    for (const auto& r : records) {
      if (r.split == config.eval_split) {
        table.insert(r.bundle.case_id, v, tv.model.predict_proba(r.bundle));
      }
    }
    if (trained != nullptr) (*trained)[v] = std::move(tv);
  }
  return table;
}

EvalSet eval_set(std::span<const bundles::BundleRecord> facts_records, corpus::Split split) {
  EvalSet e;
  for (const auto& r : facts_records) {
    if (r.split != split) continue;
    e.case_ids.push_back(r.bundle.case_id);
    e.gold.emplace(r.bundle.case_id, r.outcome);
  }
  if (e.case_ids.empty()) {
    throw Error("no cases in the " + std::string(corpus::to_string(split)) +
                " split to evaluate");
  }
  return e;
}

void add_run_metadata(estimator::EstimateReport& report, const RunConfig& config) {
  report.metadata["config_hash"] = config.hash();
  report.metadata["seeds"] = config.seeds();
  report.metadata["scorer"] = to_string(config.scorer);
  report.metadata["eval_split"] = corpus::to_string(config.eval_split);
  report.metadata["budgets"] = {{"facts", config.budgets.facts},
                                {"precedents", config.budgets.precedents},
                                {"combined", config.budgets.combined()}};
  report.metadata["precedent_budget_policy"] =
      "precedents concatenated in citation order, each as outcome markers then text; the "
      "concatenation is cut at the precedent budget, so late precedents may be lost";
  report.metadata["units"] = "nats";
}

estimator::EstimateReport estimate(const models::ScoreTable& scores, const EvalSet& eval,
                                   const ArticleSet& articles, const RunConfig& config) {
  const Variant variants[] = {Variant::kFactsOnly, Variant::kGoodhart, Variant::kHalsbury};
  scores.require(eval.case_ids, variants);
  auto report = estimator::make_report(
      estimator::cross_entropy(scores, eval.gold, eval.case_ids, Variant::kFactsOnly),
      estimator::cross_entropy(scores, eval.gold, eval.case_ids, Variant::kGoodhart),
      estimator::cross_entropy(scores, eval.gold, eval.case_ids, Variant::kHalsbury),
      articles);
  if (config.significance) {
    estimator::add_significance(report, {config.n_permutations, config.permutation_seed,
                                         config.fdr_q, config.per_article_tests});
  }
  add_run_metadata(report, config);
  return report;
}

RunResult run_builtin(std::vector<corpus::Case> cases, const ArticleSet& articles,
                      const RunConfig& config) {
  config.validate();
  auto ing = ingest(std::move(cases), articles);
  auto bundle_set = build_bundles(ing, config);
  RunResult r;
  r.subcorpus_stats = ing.subcorpus_stats;
  r.warnings = bundle_set.warnings;
  r.scores = train_and_score(bundle_set, articles.size(), config);
  r.report = estimate(r.scores, eval_set(bundle_set.records.at(Variant::kFactsOnly),
                                         config.eval_split),
                      articles, config);
  for (const auto& w : r.warnings) r.report.warnings.push_back(w);
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_report_files(const std::filesystem::path& dir,
                        const estimator::EstimateReport& report) {
  write_json(dir / "report.json", estimator::to_json(report));
  std::ostringstream header;
  if (report.metadata.contains("config_hash")) {
    header << "config " << report.metadata["config_hash"].get<std::string>() << ", seeds "
           << report.metadata.value("seeds", json::object()).dump() << "\n\n";
  }
  write_text(dir / "report.txt", header.str() + estimator::render_text_report(report));
  write_text(dir / "fig3.csv", estimator::render_article_u_csv(report));
  if (!report.aggregate_tests.empty()) {
    write_text(dir / "permtest.csv", estimator::render_tests_csv(report));
  }
}

}  // namespace precedent::pipeline
