#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "precedent/error.hpp"
#include "precedent/oracle.hpp"
#include "precedent/pipeline.hpp"
#include "support.hpp"

namespace precedent::pipeline {
namespace {

oracle::SyntheticSpec spec(double asymmetry) {
  oracle::SyntheticSpec s;
  s.vocab_size = 4;
  s.doc_length = 4;
  s.facts_strength = 0.5;
  s.precedent_signal = 1.5;
  s.info_asymmetry = asymmetry;
  s.outcome_agreement = 0.5;
  return s;
}

RunConfig synthetic_config() {
  RunConfig c;
  c.features.ngram_orders = {1};
  c.tokenizer.min_frequency = 1;
  c.n_permutations = 200;
  return c;
}

TEST(RunConfig, JsonRoundTripAndHash) {
  RunConfig c;
  c.corpus = "data/cases.jsonl";
  c.articles = "data/articles.txt";
  c.budgets.facts = 256;
  c.training.seed = 9;
  c.scorer = ScorerMode::kExternal;
  c.score_files = {"a.jsonl", "b.jsonl"};
  c.eval_split = corpus::Split::kValidation;
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);

  RunConfig moved = c;
  moved.output_dir = "elsewhere";
  EXPECT_EQ(moved.hash(), c.hash());
  moved.training.learning_rate = 0.5;
  EXPECT_NE(moved.hash(), c.hash());
  EXPECT_EQ(c.seeds()["training"], 9);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.budgets.facts = 0;
  EXPECT_THROW(c.validate(), Error);
  c = RunConfig{};
  c.fdr_q = 1.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(parse_scorer_mode("neural"), Error);
  EXPECT_EQ(parse_scorer_mode("external"), ScorerMode::kExternal);
}

TEST(RunConfig, OutputDirEnvironmentOverride) {
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output_dir("run"), "run");
  ::setenv(kOutputDirEnv, "/tmp/override", 1);
  EXPECT_EQ(resolve_output_dir("run"), "/tmp/override");
  ::unsetenv(kOutputDirEnv);
}

TEST(Pipeline, BuiltinRunTracksGroundTruth) {
  const auto s = spec(0.8);
  const auto truth = oracle::exact_entropies(s);
  const auto corpus = oracle::generate(s, {4000, 500, 4000});
  const auto r = run_builtin(corpus.cases, corpus.articles, synthetic_config());
  EXPECT_EQ(r.report.h_facts.n_cases(), 4000u);
  EXPECT_EQ(r.subcorpus_stats.split_size(corpus::Split::kTrain), 4000u);
  EXPECT_NEAR(r.report.h_facts.total_nats, truth.h_facts, 0.05);
  EXPECT_NEAR(r.report.h_halsbury.total_nats, truth.h_halsbury, 0.05);
  EXPECT_NEAR(r.report.h_goodhart.total_nats, truth.h_goodhart, 0.05);
  EXPECT_GT(r.report.mi_halsbury, r.report.mi_goodhart);
  ASSERT_EQ(r.report.aggregate_tests.size(), 3u);
  EXPECT_LT(r.report.aggregate_tests[1].result.p_value, 0.01);
  EXPECT_EQ(r.report.metadata["config_hash"], synthetic_config().hash());
  EXPECT_EQ(r.report.metadata["units"], "nats");
}

// The estimator only sees probabilities, so writing the builtin scores out
// and reading them back as external scores reproduces the estimate exactly.
TEST(Pipeline, ExternalScoresReproduceBuiltinEstimates) {
  const auto corpus = oracle::generate(spec(-0.5), {600, 100, 300});
  auto config = synthetic_config();
  const auto ingested = ingest(corpus.cases, corpus.articles);
  const auto bundles = build_bundles(ingested, config);
  const auto scores = train_and_score(bundles, corpus.articles.size(), config);
  const auto eval = eval_set(bundles.records.at(bundles::Variant::kFactsOnly), config.eval_split);
  const auto builtin = estimate(scores, eval, corpus.articles, config);

  testing::TempDir dir("external");
  models::write_scores_jsonl(dir / "scores.jsonl", scores);
  const bundles::Variant all[] = {bundles::Variant::kFactsOnly, bundles::Variant::kGoodhart,
                                  bundles::Variant::kHalsbury};
  const auto loaded = models::load_external_scores(dir / "scores.jsonl", corpus.articles.size(),
                                                   eval.case_ids, all);
  config.scorer = ScorerMode::kExternal;
  const auto external = estimate(loaded, eval, corpus.articles, config);
  EXPECT_EQ(external.h_facts.total_nats, builtin.h_facts.total_nats);
  EXPECT_EQ(external.h_goodhart.total_nats, builtin.h_goodhart.total_nats);
  EXPECT_EQ(external.h_halsbury.total_nats, builtin.h_halsbury.total_nats);
  EXPECT_EQ(external.mi_halsbury, builtin.mi_halsbury);
  EXPECT_EQ(estimator::to_json(external.aggregate_tests[2]),
            estimator::to_json(builtin.aggregate_tests[2]));
}

TEST(Pipeline, MissingVariantScoresRaiseCoverageError) {
  const auto corpus = oracle::generate(spec(0.0), {50, 10, 10});
  auto config = synthetic_config();
  const auto ingested = ingest(corpus.cases, corpus.articles);
  const auto bundles = build_bundles(ingested, config);
  const auto eval = eval_set(bundles.records.at(bundles::Variant::kFactsOnly), config.eval_split);
  models::ScoreTable partial(1);
  for (const auto& id : eval.case_ids) {
    partial.insert(id, bundles::Variant::kFactsOnly, {0.5});
    partial.insert(id, bundles::Variant::kGoodhart, {0.5});
  }
  try {
    estimate(partial, eval, corpus.articles, config);
    FAIL();
  } catch (const models::CoverageError& e) {
    EXPECT_EQ(e.gaps().size(), eval.case_ids.size());
    EXPECT_NE(e.gaps().front().find("/halsbury"), std::string::npos);
  }
}

TEST(Pipeline, CasesWithoutArgumentMaterialAreDroppedFromEveryVariant) {
  using testing::make_case;
  const ArticleSet articles({"3"});
  std::vector<corpus::Case> cases{
      make_case("p1", "alpha beta", "", {1}, {}),
      make_case("p2", "gamma delta", "argued gamma", {0}, {}),
      make_case("a", "alpha gamma", "", {1}, {"p1"}),
      make_case("b", "beta delta", "", {0}, {"p2"}),
      make_case("c", "beta gamma", "", {1}, {"p1", "p2"}),
  };
  RunConfig config;
  config.tokenizer.min_frequency = 1;
  const auto bundles = build_bundles(ingest(cases, articles), config);
  for (const auto& [variant, records] : bundles.records) {
    ASSERT_EQ(records.size(), 2u) << bundles::to_string(variant);
    EXPECT_EQ(records[0].bundle.case_id, "b");
    EXPECT_EQ(records[1].bundle.case_id, "c");
  }
  ASSERT_FALSE(bundles.warnings.empty());
  EXPECT_NE(bundles.warnings.front().find("'a'"), std::string::npos);
}

TEST(Pipeline, NoResolvableCitationsIsAnError) {
  using testing::make_case;
  std::vector<corpus::Case> cases{make_case("a", "x", "y", {1}, {"nowhere"}),
                                  make_case("b", "x", "y", {0}, {})};
  EXPECT_THROW(ingest(cases, ArticleSet({"3"})), Error);
}

TEST(Pipeline, ReportFilesAreWritten) {
  const auto corpus = oracle::generate(spec(0.8), {300, 50, 100});
  const auto r = run_builtin(corpus.cases, corpus.articles, synthetic_config());
  testing::TempDir dir("report");
  write_report_files(dir.path(), r.report);
  for (const char* f : {"report.json", "report.txt", "fig3.csv", "permtest.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto back = estimator::report_from_json(read_json(dir / "report.json"), corpus.articles);
  EXPECT_EQ(estimator::to_json(back), estimator::to_json(r.report));
  std::ifstream txt(dir / "report.txt");
  std::string first;
  std::getline(txt, first);
  EXPECT_NE(first.find(synthetic_config().hash()), std::string::npos);
}

}  // namespace
}  // namespace precedent::pipeline
