#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "precedent/corpus.hpp"
#include "precedent/error.hpp"
#include "support.hpp"

namespace precedent::corpus {
namespace {

using testing::make_case;

const ArticleSet kArticles({"2", "3", "6"});

TEST(ArticleSet, ParsesCommentsAndBlankLines) {
  const auto a = ArticleSet::parse("# ECHR\n2\n\n 3 \nP1-1\n");
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.label(2), "P1-1");
  EXPECT_EQ(a.index_of("3"), 1u);
  EXPECT_FALSE(a.index_of("4").has_value());
}

TEST(ArticleSet, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(ArticleSet::parse("2\n2\n"), Error);
  EXPECT_THROW(ArticleSet::parse("# nothing\n"), Error);
}

TEST(ArticleSet, SaveLoadRoundTrip) {
  testing::TempDir dir("articles");
  kArticles.save(dir / "a.txt");
  EXPECT_EQ(ArticleSet::load(dir / "a.txt"), kArticles);
}

TEST(Sections, SplitsFactsAndLaw) {
  const std::string body = "PROCEDURE\nx\nTHE FACTS\nfacts here\nTHE LAW\nlaw here\n";
  const auto s = split_sections(body);
  EXPECT_EQ(body.substr(s.facts.begin, s.facts.size()), "facts here");
  ASSERT_TRUE(s.arguments.has_value());
  EXPECT_EQ(body.substr(s.arguments->begin, s.arguments->size()), "law here");
}

TEST(Sections, HeadingMatchIsCaseInsensitiveAndAnchored) {
  const std::string body = "  The Facts\nA said THE LAW applies.\nthe law\nreasons";
  const auto s = split_sections(body);
  EXPECT_EQ(body.substr(s.facts.begin, s.facts.size()), "A said THE LAW applies.");
  EXPECT_EQ(body.substr(s.arguments->begin, s.arguments->size()), "reasons");
}

TEST(Sections, HeadingMustNotRunIntoAWord) {
  EXPECT_THROW(split_sections("THE FACTSHEET\nx\n"), Error);
}

TEST(Sections, MissingLawHeadingLeavesArgumentsEmpty) {
  const auto s = split_sections("THE FACTS\nonly facts\n");
  EXPECT_FALSE(s.arguments.has_value());
}

TEST(Sections, FirstMatchPerKindWinsAndSectionsDoNotOverlap) {
  const std::string body = "THE LAW\nearly\nTHE FACTS\nf\nTHE FACTS\nagain\n";
  const auto s = split_sections(body);
  EXPECT_EQ(body.substr(s.facts.begin, s.facts.size()), "f\nTHE FACTS\nagain");
  EXPECT_EQ(body.substr(s.arguments->begin, s.arguments->size()), "early");
}

TEST(Sections, CustomHeadings) {
  SectionRules rules;
  rules.headings = {{SectionKind::kFacts, "CIRCUMSTANCES|FACTS"},
                    {SectionKind::kArguments, "AS TO THE LAW"}};
  const std::string body = "FACTS\nx\nAS TO THE LAW\ny";
  const auto s = split_sections(body, rules);
  EXPECT_EQ(body.substr(s.arguments->begin, s.arguments->size()), "y");
}

TEST(Citations, NormalizeAndDedup) {
  EXPECT_EQ(normalize_id("  Case  001\t"), "case 001");
  const std::vector<std::string> cites{"A-1", " a-1 ", "B", "A-1", "b"};
  EXPECT_EQ(dedup_citations(cites), (std::vector<std::string>{"A-1", "B"}));
}

TEST(ParseCase, RejectsUnknownArticleAndMissingFacts) {
  RawDocument doc{"d1", "THE FACTS\nx\n", {"2", "99"}, {}, Split::kTrain};
  try {
    parse_case(doc, kArticles);
    FAIL() << "expected rejection";
  } catch (const DocumentRejected& e) {
    EXPECT_EQ(e.document_id(), "d1");
  }
  doc.outcome_labels = {"2"};
  doc.body = "no heading";
  EXPECT_THROW(parse_case(doc, kArticles), DocumentRejected);
  doc.body = "THE FACTS\n  \nTHE LAW\nx";
  EXPECT_THROW(parse_case(doc, kArticles), DocumentRejected);
}

TEST(ParseCase, RoundTripsThroughRawDocument) {
  const auto c = make_case("c", "some facts", "some law", {1, 0, 1}, {"p", "q"}, Split::kTest);
  const auto back = parse_case(to_raw_document(c, kArticles), kArticles);
  EXPECT_EQ(back.facts, c.facts);
  EXPECT_EQ(back.arguments, c.arguments);
  EXPECT_EQ(back.outcome, c.outcome);
  EXPECT_EQ(back.cited_ids, c.cited_ids);
  EXPECT_EQ(back.split, Split::kTest);
}

TEST(CitationGraph, ResolvesDropsSelfAndCountsUnresolved) {
  const std::vector<Case> cases{
      make_case("A", "f", "a", {0, 0, 0}, {"b", "A", "ext-1", "B ", "ext-1", "ext-2"}),
      make_case("B", "f", "a", {0, 0, 0}, {"C"}),
      make_case("C", "f", "", {1, 0, 0}),
  };
  const auto g = resolve_citations(cases);
  EXPECT_EQ(g.precedents("A"), (std::vector<std::string>{"B"}));
  EXPECT_EQ(g.unresolved_count("A"), 2u);
  EXPECT_EQ(g.precedents("B"), (std::vector<std::string>{"C"}));
  EXPECT_TRUE(g.precedents("C").empty());
  EXPECT_NO_THROW(validate_graph(g, cases));

  const auto sub = filter_subcorpus(cases, g);
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub[0].id, "A");
  EXPECT_EQ(sub[1].id, "B");
}

TEST(CitationGraph, ValidateCatchesBrokenGraphs) {
  const std::vector<Case> cases{make_case("A", "f", "", {0, 0, 0}),
                                make_case("B", "f", "", {0, 0, 0})};
  CitationGraph g;
  g.edges["A"] = {"A"};
  EXPECT_THROW(validate_graph(g, cases), Error);
  g.edges["A"] = {"B", "B"};
  EXPECT_THROW(validate_graph(g, cases), Error);
  g.edges["A"] = {"Z"};
  EXPECT_THROW(validate_graph(g, cases), Error);
}

TEST(CitationGraph, DuplicateIdsAreAnError) {
  const std::vector<Case> cases{make_case("A", "f", "", {0, 0, 0}),
                                make_case(" a", "f", "", {0, 0, 0})};
  EXPECT_THROW(resolve_citations(cases), Error);
}

TEST(CitationGraph, NothingResolvableIsAnError) {
  const std::vector<Case> cases{make_case("A", "f", "", {0, 0, 0}, {"ext"})};
  const auto g = resolve_citations(cases);
  EXPECT_THROW(filter_subcorpus(cases, g), Error);
}

// Property: on random graphs, resolved lists are duplicate-free, never
// self-referencing, and links + unresolved equal the distinct citations.
TEST(CitationGraph, RandomGraphInvariants) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    std::vector<Case> cases;
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> cites;
      std::set<std::string> keys;
      const std::size_t m = rng() % 6;
      for (std::size_t j = 0; j < m; ++j) {
        const bool external = rng() % 3 == 0;
        std::string id = external ? "x" + std::to_string(rng() % 4)
                                  : "c" + std::to_string(rng() % n);
        if (rng() % 2) id = " " + id;
        cites.push_back(id);
        const auto key = normalize_id(id);
        if (key != "c" + std::to_string(i)) keys.insert(key);
      }
      distinct += keys.size();
      cases.push_back(make_case("c" + std::to_string(i), "f", "", {0, 0, 0},
                                dedup_citations(cites)));
    }
    const auto g = resolve_citations(cases);
    ASSERT_NO_THROW(validate_graph(g, cases));
    std::size_t total = 0;
    for (const auto& c : cases) total += g.precedents(c.id).size() + g.unresolved_count(c.id);
    EXPECT_EQ(total, distinct);
  }
}

TEST(Jsonl, AcceptsRawAndPreSplitRecordsAndReportsRejections) {
  std::istringstream in(
      R"({"id":"a","body":"THE FACTS\nf1\nTHE LAW\nl1","outcome":["3"],"citations":["b"],"split":"test"})"
      "\n\n"
      R"({"id":"b","facts":"f2","arguments":"","outcome":[],"citations":[]})"
      "\n"
      R"({"id":"c","body":"nothing","outcome":[]})"
      "\n"
      "{not json\n"
      R"({"id":"a","facts":"dup","outcome":[]})"
      "\n"
      R"({"id":"d","facts":"f","outcome":[],"split":"holdout"})"
      "\n");
  const auto r = parse_cases_jsonl(in, kArticles);
  ASSERT_EQ(r.cases.size(), 2u);
  EXPECT_EQ(r.cases[0].outcome, (Outcome{0, 1, 0}));
  EXPECT_EQ(r.cases[0].split, Split::kTest);
  EXPECT_EQ(r.cases[1].split, Split::kTrain);
  EXPECT_FALSE(r.cases[1].has_arguments());
  ASSERT_EQ(r.diagnostics.size(), 4u);
  EXPECT_EQ(r.diagnostics[0].rfind("line 4: ", 0), 0u);
  EXPECT_EQ(r.diagnostics[1].rfind("line 5: ", 0), 0u);
}

TEST(Jsonl, WriteReadRoundTrip) {
  testing::TempDir dir("jsonl");
  const std::vector<Case> cases{make_case("a", "facts a", "law a", {1, 1, 0}, {"b"}),
                                make_case("b", "facts b", "", {0, 0, 0}, {}, Split::kValidation)};
  write_cases_jsonl(dir / "c.jsonl", cases, kArticles);
  const auto r = read_cases_jsonl(dir / "c.jsonl", kArticles);
  ASSERT_TRUE(r.diagnostics.empty());
  ASSERT_EQ(r.cases.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.cases[i].id, cases[i].id);
    EXPECT_EQ(r.cases[i].facts, cases[i].facts);
    EXPECT_EQ(r.cases[i].arguments, cases[i].arguments);
    EXPECT_EQ(r.cases[i].outcome, cases[i].outcome);
    EXPECT_EQ(r.cases[i].cited_ids, cases[i].cited_ids);
    EXPECT_EQ(r.cases[i].split, cases[i].split);
  }
}

// Counts follow from how tests/data/make_mini_corpus.py builds the records.
TEST(MiniCorpus, CountsMatchConstruction) {
  const auto articles = ArticleSet::load(testing::data_dir() / "mini_articles.txt");
  const auto r = read_cases_jsonl(testing::data_dir() / "mini_corpus.jsonl", articles);
  EXPECT_EQ(r.cases.size(), 47u);
  EXPECT_EQ(r.diagnostics.size(), 3u);

  const auto g = resolve_citations(r.cases);
  const auto all = corpus_stats(r.cases, g, articles);
  EXPECT_EQ(all.split_size(Split::kTrain), 28u);
  EXPECT_EQ(all.split_size(Split::kValidation), 9u);
  EXPECT_EQ(all.split_size(Split::kTest), 10u);
  EXPECT_EQ(all.cases_without_arguments, 4u);
  EXPECT_EQ(all.out_of_corpus_links, 55u);

  const auto sub = filter_subcorpus(r.cases, g);
  const auto s = corpus_stats(sub, g, articles);
  EXPECT_EQ(s.total_documents, 34u);
  EXPECT_EQ(s.split_size(Split::kTrain), 18u);
  EXPECT_EQ(s.split_size(Split::kValidation), 7u);
  EXPECT_EQ(s.split_size(Split::kTest), 9u);
  EXPECT_EQ(s.in_corpus_links, 87u);
  EXPECT_EQ(s.in_corpus_types, 41u);
  EXPECT_EQ(s.out_of_corpus_links, 40u);
  EXPECT_EQ(s.out_of_corpus_types, 17u);
  EXPECT_EQ(s.cases_without_arguments, 3u);
  EXPECT_EQ(s.article_violations, (std::vector<std::size_t>{5, 5, 5, 6, 7}));
}

}  // namespace
}  // namespace precedent::corpus
