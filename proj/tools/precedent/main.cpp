// precedent: command-line driver for the estimation pipeline and the
// synthetic oracle.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "precedent/error.hpp"
#include "precedent/oracle.hpp"
#include "precedent/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace precedent;
using bundles::Variant;

namespace {

// Flags that override the stored run configuration.
struct ConfigFlags {
  std::string out = "run";
  std::optional<std::string> config_file;
  std::optional<std::string> corpus;
  std::optional<std::string> articles;
  std::optional<std::size_t> min_frequency;
  std::optional<bool> lowercase;
  std::optional<std::vector<int>> ngrams;
  std::optional<unsigned> hash_bits;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint64_t> train_seed;
  std::optional<bool> early_stopping;
  std::optional<std::size_t> facts_budget;
  std::optional<std::size_t> precedent_budget;
  std::optional<std::uint64_t> permutations;
  std::optional<std::uint64_t> perm_seed;
  std::optional<double> q;
  std::optional<bool> per_article;
  std::optional<std::string> scorer;
  std::optional<std::vector<std::string>> scores;
  std::optional<std::string> eval_split;
};

void add_common(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("-o,--out", f.out, "Run directory")->capture_default_str();
  cmd->add_option("--config", f.config_file, "Run configuration JSON");
}

void add_corpus_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--corpus", f.corpus, "Corpus JSONL file or directory");
  cmd->add_option("--articles", f.articles, "Article label list");
}

void add_bundle_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--min-frequency", f.min_frequency, "Vocabulary frequency cut-off");
  cmd->add_option("--lowercase", f.lowercase, "Case-fold before tokenizing");
  cmd->add_option("--facts-budget", f.facts_budget, "Token budget for current facts");
  cmd->add_option("--precedent-budget", f.precedent_budget,
                  "Token budget for the precedent segment");
}

void add_train_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--ngrams", f.ngrams, "N-gram orders");
  cmd->add_option("--hash-bits", f.hash_bits, "log2 of the feature space");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--lr", f.learning_rate, "Learning rate");
  cmd->add_option("--batch-size", f.batch_size, "Minibatch size, 0 for full batch");
  cmd->add_option("--train-seed", f.train_seed);
  cmd->add_option("--early-stopping", f.early_stopping);
  cmd->add_option("--eval-split", f.eval_split, "Split that is scored and estimated");
}

void add_test_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--permutations", f.permutations, "Monte Carlo sign-flip count");
  cmd->add_option("--perm-seed", f.perm_seed);
  cmd->add_option("--q", f.q, "Benjamini-Hochberg FDR level");
  cmd->add_option("--per-article", f.per_article, "Also test each article");
}

void add_scorer_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--scorer", f.scorer, "builtin or external");
  cmd->add_option("--scores", f.scores, "External score files (JSONL)");
}

pipeline::RunConfig load_config(const ConfigFlags& f) {
  const fs::path out = pipeline::resolve_output_dir(f.out);
  pipeline::RunConfig c;
  if (f.config_file) {
    c = pipeline::RunConfig::from_json(pipeline::read_json(*f.config_file));
  } else if (fs::exists(out / "config.json")) {
    c = pipeline::RunConfig::from_json(pipeline::read_json(out / "config.json"));
  }
  c.output_dir = out;
  if (f.corpus) c.corpus = *f.corpus;
  if (f.articles) c.articles = *f.articles;
  if (f.min_frequency) c.tokenizer.min_frequency = *f.min_frequency;
  if (f.lowercase) c.tokenizer.lowercase = *f.lowercase;
  if (f.ngrams) c.features.ngram_orders = *f.ngrams;
  if (f.hash_bits) c.features.hash_bits = *f.hash_bits;
  if (f.epochs) c.training.epochs = *f.epochs;
  if (f.learning_rate) c.training.learning_rate = *f.learning_rate;
  if (f.batch_size) c.training.batch_size = *f.batch_size;
  if (f.train_seed) c.training.seed = *f.train_seed;
  if (f.early_stopping) c.training.early_stopping = *f.early_stopping;
  if (f.facts_budget) c.budgets.facts = *f.facts_budget;
  if (f.precedent_budget) c.budgets.precedents = *f.precedent_budget;
  if (f.permutations) c.n_permutations = *f.permutations;
  if (f.perm_seed) c.permutation_seed = *f.perm_seed;
  if (f.q) c.fdr_q = *f.q;
  if (f.per_article) c.per_article_tests = *f.per_article;
  if (f.scorer) c.scorer = pipeline::parse_scorer_mode(*f.scorer);
  if (f.scores) {
    c.score_files.assign(f.scores->begin(), f.scores->end());
    if (!f.scorer) c.scorer = pipeline::ScorerMode::kExternal;
  }
  if (f.eval_split) c.eval_split = corpus::parse_split(*f.eval_split);
  c.validate();
  return c;
}

void save_config(const pipeline::RunConfig& c) {
  auto j = c.to_json();
  j["config_hash"] = c.hash();
  pipeline::write_json(c.output_dir / "config.json", j);
}

// Appends to the run log and echoes to stderr.
class Log {
 public:
  Log(const fs::path& dir, bool truncate) {
    fs::create_directories(dir);
    file_.open(dir / "log.txt", truncate ? std::ios::trunc : std::ios::app);
  }
  void operator()(const std::string& line) {
    std::cerr << line << '\n';
    file_ << line << '\n';
  }

 private:
  std::ofstream file_;
};

json stamp(const pipeline::RunConfig& c) {
  return json{{"config_hash", c.hash()}, {"seeds", c.seeds()}};
}

// ---- stages ----------------------------------------------------------------

pipeline::IngestResult stage_ingest(const pipeline::RunConfig& c, Log& log) {
  auto r = pipeline::ingest(c);
  const fs::path dir = c.output_dir / "ingest";
  fs::create_directories(dir);
  r.articles.save(c.output_dir / "articles.txt");
  corpus::write_cases_jsonl(dir / "cases.jsonl", r.cases, r.articles);
  corpus::write_cases_jsonl(dir / "subcorpus.jsonl", r.subcorpus, r.articles);
  auto stats = pipeline::stats_json(r);
  stats["run"] = stamp(c);
  pipeline::write_json(dir / "stats.json", stats);
  std::string diag;
  for (const auto& d : r.diagnostics) diag += d + '\n';
  pipeline::write_text(dir / "diagnostics.txt", diag);

  const auto& s = r.subcorpus_stats;
  log("ingest: " + std::to_string(r.cases.size()) + " documents read, " +
      std::to_string(r.diagnostics.size()) + " rejected");
  log("ingest: sub-corpus train/validation/test = " +
      std::to_string(s.split_size(corpus::Split::kTrain)) + "/" +
      std::to_string(s.split_size(corpus::Split::kValidation)) + "/" +
      std::to_string(s.split_size(corpus::Split::kTest)));
  log("ingest: in-corpus citation links " + std::to_string(r.corpus_stats.in_corpus_links) +
      ", out-of-corpus " + std::to_string(r.corpus_stats.out_of_corpus_links));
  return r;
}

pipeline::IngestResult load_ingest(const pipeline::RunConfig& c) {
  auto articles = ArticleSet::load(c.output_dir / "articles.txt");
  auto read = corpus::read_cases_jsonl(c.output_dir / "ingest" / "cases.jsonl", articles);
  if (!read.diagnostics.empty()) {
    throw Error("stored cases failed to load: " + read.diagnostics.front());
  }
  return pipeline::ingest(std::move(read.cases), std::move(articles));
}

pipeline::BundleSet stage_bundle(const pipeline::IngestResult& ing,
                                 const pipeline::RunConfig& c, Log& log) {
  auto set = pipeline::build_bundles(ing, c);
  const fs::path dir = c.output_dir / "bundles";
  fs::create_directories(dir);
  set.tokenizer.save(dir / "tokenizer.json");
  for (const auto& [v, records] : set.records) {
    bundles::write_bundles_jsonl(dir / (std::string(bundles::to_string(v)) + ".jsonl"),
                                 records);
  }
  std::string warn;
  for (const auto& w : set.warnings) {
    warn += w + '\n';
    log("bundle: " + w);
  }
  pipeline::write_text(dir / "warnings.txt", warn);
  log("bundle: " + std::to_string(set.records.at(Variant::kFactsOnly).size()) +
      " cases bundled, vocabulary " + std::to_string(set.tokenizer.size()));
  return set;
}

pipeline::BundleSet load_bundles(const pipeline::RunConfig& c) {
  pipeline::BundleSet set;
  const fs::path dir = c.output_dir / "bundles";
  set.tokenizer = bundles::Tokenizer::load(dir / "tokenizer.json");
  for (const auto v : bundles::kAllVariants) {
    set.records[v] =
        bundles::read_bundles_jsonl(dir / (std::string(bundles::to_string(v)) + ".jsonl"));
  }
  return set;
}

fs::path builtin_scores_path(const pipeline::RunConfig& c) {
  return c.output_dir / "scores" / "builtin.jsonl";
}
fs::path external_scores_path(const pipeline::RunConfig& c) {
  return c.output_dir / "scores" / "external.jsonl";
}

models::ScoreTable stage_train(const pipeline::BundleSet& set, const ArticleSet& articles,
                               const pipeline::RunConfig& c, Log& log) {
  std::map<Variant, pipeline::TrainedVariant> trained;
  auto scores = pipeline::train_and_score(set, articles.size(), c, &trained);
  const fs::path dir = c.output_dir / "models";
  fs::create_directories(dir);
  json curves = json::object();
  for (const auto& [v, tv] : trained) {
    const std::string name(bundles::to_string(v));
    tv.model.save(dir / (name + ".json"));
    curves[name] = {{"train_loss", tv.report.train_loss},
                    {"validation_loss", tv.report.validation_loss},
                    {"selected_epoch", tv.report.selected_epoch}};
    char line[160];
    std::snprintf(line, sizeof line, "train: %s model, epoch %zu selected, train CE %.4f",
                  name.c_str(), tv.report.selected_epoch,
                  tv.report.train_loss.at(tv.report.selected_epoch));
    log(line);
  }
  pipeline::write_json(dir / "training.json", json{{"curves", curves}, {"run", stamp(c)}});
  fs::create_directories(builtin_scores_path(c).parent_path());
  models::write_scores_jsonl(builtin_scores_path(c), scores);
  return scores;
}

pipeline::EvalSet load_eval(const pipeline::RunConfig& c) {
  const auto facts =
      bundles::read_bundles_jsonl(c.output_dir / "bundles" / "facts.jsonl");
  return pipeline::eval_set(facts, c.eval_split);
}

models::ScoreTable stage_score_import(const pipeline::RunConfig& c,
                                      const pipeline::EvalSet& eval, std::size_t k,
                                      Log& log) {
  models::ScoreTable table(k);
  for (const auto& path : c.score_files) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open score file " + path.string());
    table = models::parse_scores(in, k, std::move(table), path.string());
  }
  const Variant variants[] = {Variant::kFactsOnly, Variant::kGoodhart, Variant::kHalsbury};
  table.require(eval.case_ids, variants);
  fs::create_directories(external_scores_path(c).parent_path());
  models::write_scores_jsonl(external_scores_path(c), table);
  log("score-import: " + std::to_string(table.size()) + " rows from " +
      std::to_string(c.score_files.size()) + " files cover all " +
      std::to_string(eval.case_ids.size()) + " evaluation cases");
  return table;
}

models::ScoreTable load_scores(const pipeline::RunConfig& c, std::size_t k,
                               const pipeline::EvalSet& eval) {
  const fs::path path = c.scorer == pipeline::ScorerMode::kBuiltin ? builtin_scores_path(c)
                                                                   : external_scores_path(c);
  const Variant variants[] = {Variant::kFactsOnly, Variant::kGoodhart, Variant::kHalsbury};
  return models::load_external_scores(path, k, eval.case_ids, variants);
}

estimator::EstimateReport stage_estimate(const models::ScoreTable& scores,
                                         const pipeline::EvalSet& eval,
                                         const ArticleSet& articles,
                                         pipeline::RunConfig c, Log& log) {
  c.significance = false;
  auto report = pipeline::estimate(scores, eval, articles, c);
  pipeline::write_json(c.output_dir / "estimate.json", estimator::to_json(report));
  char line[200];
  std::snprintf(line, sizeof line,
                "estimate: H(facts) %.4f, H(goodhart) %.4f, H(halsbury) %.4f nats over %zu "
                "cases",
                report.h_facts.total_nats, report.h_goodhart.total_nats,
                report.h_halsbury.total_nats, report.h_facts.n_cases());
  log(line);
  for (const auto& w : report.warnings) log("estimate: warning: " + w);
  return report;
}

void stage_permtest(estimator::EstimateReport& report, const pipeline::RunConfig& c,
                    Log& log) {
  estimator::add_significance(report, {c.n_permutations, c.permutation_seed, c.fdr_q,
                                       c.per_article_tests});
  pipeline::add_run_metadata(report, c);
  json tests = json::array();
  for (const auto& t : report.aggregate_tests) tests.push_back(estimator::to_json(t));
  json article_tests = json::array();
  for (const auto& t : report.article_tests) article_tests.push_back(estimator::to_json(t));
  pipeline::write_json(c.output_dir / "permtest.json",
                       json{{"aggregate", tests},
                            {"per_article", article_tests},
                            {"q", c.fdr_q},
                            {"run", stamp(c)}});
  pipeline::write_text(c.output_dir / "permtest.csv", estimator::render_tests_csv(report));
  for (const auto& t : report.aggregate_tests) {
    char line[160];
    std::snprintf(line, sizeof line, "permtest: %s mean diff %.4f, p = %.4g%s",
                  t.name.c_str(), t.result.statistic, t.result.p_value,
                  t.result.bh_rejected ? " (rejected)" : "");
    log(line);
  }
}

void stage_report(const estimator::EstimateReport& report, const pipeline::RunConfig& c,
                  bool bits, Log& log) {
  pipeline::write_report_files(c.output_dir, report);
  if (bits) {
    pipeline::write_text(c.output_dir / "report_bits.txt",
                         estimator::render_text_report(report, estimator::Units::kBits));
  }
  std::cout << estimator::render_summary_table(report);
  log("report: written to " + c.output_dir.string());
}

estimator::EstimateReport load_estimate(const pipeline::RunConfig& c,
                                        const ArticleSet& articles) {
  return estimator::report_from_json(pipeline::read_json(c.output_dir / "estimate.json"),
                                     articles);
}

void load_permtest(estimator::EstimateReport& report, const pipeline::RunConfig& c) {
  const fs::path path = c.output_dir / "permtest.json";
  if (!fs::exists(path)) return;
  const auto j = pipeline::read_json(path);
  for (const auto& t : j.at("aggregate")) {
    report.aggregate_tests.push_back(estimator::comparison_from_json(t));
  }
  for (const auto& t : j.at("per_article")) {
    report.article_tests.push_back(estimator::comparison_from_json(t));
  }
}

int run_full(const pipeline::RunConfig& c, bool bits) {
  Log log(c.output_dir, true);
  save_config(c);
  const auto ing = stage_ingest(c, log);
  const auto set = stage_bundle(ing, c, log);
  const auto eval = pipeline::eval_set(set.records.at(Variant::kFactsOnly), c.eval_split);
  const auto scores = c.scorer == pipeline::ScorerMode::kBuiltin
                          ? stage_train(set, ing.articles, c, log)
                          : stage_score_import(c, eval, ing.articles.size(), log);
  auto report = stage_estimate(scores, eval, ing.articles, c, log);
  for (const auto& w : set.warnings) report.warnings.push_back(w);
  if (c.significance) stage_permtest(report, c, log);
  stage_report(report, c, bits, log);
  return 0;
}

// ---- synthetic oracle ---------------------------------------------------------

oracle::SyntheticSpec load_spec(const std::string& path, std::optional<std::uint64_t> seed) {
  auto spec = oracle::SyntheticSpec::load(path);
  if (seed) spec.seed = *seed;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Precedent information estimates: corpus ingest, conditioning bundles, "
               "outcome models, cross-entropy and mutual information, significance tests, "
               "and a synthetic oracle with exact entropies."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "precedent 0.1.0");

  ConfigFlags flags;
  bool bits = false;

  auto* ingest = app.add_subcommand("ingest", "Parse the corpus and filter to cited cases");
  add_common(ingest, flags);
  add_corpus_flags(ingest, flags);

  auto* bundle = app.add_subcommand("bundle", "Build facts, Goodhart and Halsbury bundles");
  add_common(bundle, flags);
  add_bundle_flags(bundle, flags);

  auto* train = app.add_subcommand("train", "Train the builtin models and score the eval split");
  add_common(train, flags);
  add_train_flags(train, flags);

  auto* import = app.add_subcommand("score-import", "Validate and import external score files");
  add_common(import, flags);
  import->add_option("--scores", flags.scores, "Score files (JSONL)")->required();

  auto* est = app.add_subcommand("estimate", "Cross-entropies, MI and U from stored scores");
  add_common(est, flags);
  add_scorer_flags(est, flags);

  auto* perm = app.add_subcommand("permtest", "Paired permutation tests with BH correction");
  add_common(perm, flags);
  add_test_flags(perm, flags);

  auto* report = app.add_subcommand("report", "Render report.json, report.txt and fig3.csv");
  add_common(report, flags);
  report->add_flag("--bits", bits, "Also write a report in bits");

  auto* run = app.add_subcommand("run", "All stages: ingest through report");
  add_common(run, flags);
  add_corpus_flags(run, flags);
  add_bundle_flags(run, flags);
  add_train_flags(run, flags);
  add_test_flags(run, flags);
  add_scorer_flags(run, flags);
  bool no_tests = false;
  run->add_flag("--no-permtest", no_tests, "Skip the permutation tests");
  run->add_flag("--bits", bits, "Also write a report in bits");

  std::string spec_path;
  std::size_t n_cases = 1000;
  std::optional<std::uint64_t> seed;
  std::string synth_out = "synthetic";
  auto* gen = app.add_subcommand("synth-gen", "Generate a synthetic corpus from a spec file");
  gen->add_option("--spec", spec_path, "key = value spec file")->required();
  gen->add_option("-n,--cases", n_cases, "Citing cases (80/10/10 split)")->capture_default_str();
  gen->add_option("--seed", seed, "Override the spec seed");
  gen->add_option("-o,--out", synth_out, "Output directory")->capture_default_str();

  std::optional<std::string> truth_out;
  auto* truth = app.add_subcommand("synth-truth", "Exact entropies of a spec");
  truth->add_option("--spec", spec_path, "key = value spec file")->required();
  truth->add_option("-o,--out", truth_out, "Write ground_truth.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto spec = load_spec(spec_path, seed);
      const auto corpus = oracle::generate(spec, oracle::default_splits(n_cases));
      const fs::path out = synth_out;
      fs::create_directories(out);
      corpus.articles.save(out / "articles.txt");
      corpus::write_raw_jsonl(out / "corpus.jsonl", oracle::to_raw_documents(corpus));
      pipeline::write_json(out / "spec.json", spec.to_json());
      std::cerr << "synth-gen: " << corpus.cases.size() << " documents written to "
                << out.string() << '\n';
      return 0;
    }
    if (truth->parsed()) {
      const auto spec = load_spec(spec_path, std::nullopt);
      auto j = oracle::to_json(oracle::exact_entropies(spec));
      j["spec"] = spec.to_json();
      if (truth_out) {
        pipeline::write_json(fs::path(*truth_out) / "ground_truth.json", j);
      }
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    auto config = load_config(flags);
    if (run->parsed()) {
      if (no_tests) config.significance = false;
      return run_full(config, bits);
    }

    Log log(config.output_dir, ingest->parsed());
    save_config(config);
    if (ingest->parsed()) {
      stage_ingest(config, log);
    } else if (bundle->parsed()) {
      stage_bundle(load_ingest(config), config, log);
    } else if (train->parsed()) {
      const auto articles = ArticleSet::load(config.output_dir / "articles.txt");
      stage_train(load_bundles(config), articles, config, log);
    } else if (import->parsed()) {
      const auto articles = ArticleSet::load(config.output_dir / "articles.txt");
      stage_score_import(config, load_eval(config), articles.size(), log);
    } else if (est->parsed()) {
      const auto articles = ArticleSet::load(config.output_dir / "articles.txt");
      const auto eval = load_eval(config);
      stage_estimate(load_scores(config, articles.size(), eval), eval, articles, config, log);
    } else if (perm->parsed()) {
      const auto articles = ArticleSet::load(config.output_dir / "articles.txt");
      auto r = load_estimate(config, articles);
      stage_permtest(r, config, log);
    } else if (report->parsed()) {
      const auto articles = ArticleSet::load(config.output_dir / "articles.txt");
      auto r = load_estimate(config, articles);
      load_permtest(r, config);
      pipeline::add_run_metadata(r, config);
      stage_report(r, config, bits, log);
    }
    return 0;
  } catch (const models::CoverageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& g : e.gaps()) std::cerr << "  missing " << g << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
