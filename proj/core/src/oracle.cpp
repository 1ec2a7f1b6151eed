#include "precedent/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "precedent/error.hpp"

namespace precedent::oracle {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string v(value);
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw Error("spec key '" + std::string(key) + "': cannot parse '" +
                std::string(value) + "' as a number");
  }
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  const double d = parse_double(key, value);
  if (d < 0 || d != std::floor(d) || d > 1e15) {
    throw Error("spec key '" + std::string(key) + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(d);
}

// Number of count vectors of `n` draws over `v` symbols, saturating.
double compositions_count(std::size_t n, std::size_t v) {
  double c = 1.0;
  for (std::size_t i = 1; i < v; ++i) {
    c = c * static_cast<double>(n + i) / static_cast<double>(i);
    if (c > 1e18) return 1e18;
  }
  return c;
}

void enumerate_compositions(std::size_t n, std::size_t v, std::vector<std::size_t>& cur,
                            std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() + 1 == v) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t c = 0; c <= n; ++c) {
    cur.push_back(c);
    enumerate_compositions(n - c, v, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<std::size_t>> compositions(std::size_t n, std::size_t v) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  enumerate_compositions(n, v, cur, out);
  return out;
}

// Multinomial probability of `counts` under `q`.
double multinomial(std::span<const std::size_t> counts, std::span<const double> q) {
  std::size_t n = 0;
  double log_p = 0.0;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    n += counts[v];
    if (counts[v] == 0) continue;
    if (q[v] <= 0.0) return 0.0;
    log_p += static_cast<double>(counts[v]) * std::log(q[v]) -
             std::lgamma(static_cast<double>(counts[v]) + 1.0);
  }
  return std::exp(log_p + std::lgamma(static_cast<double>(n) + 1.0));
}

double binomial(std::size_t n, std::size_t m, double r) {
  const double log_coef = std::lgamma(static_cast<double>(n) + 1.0) -
                          std::lgamma(static_cast<double>(m) + 1.0) -
                          std::lgamma(static_cast<double>(n - m) + 1.0);
  const double a = m == 0 ? 1.0 : std::pow(r, static_cast<double>(m));
  const double b = m == n ? 1.0 : std::pow(1.0 - r, static_cast<double>(n - m));
  return std::exp(log_coef) * a * b;
}

// -sum_o J_o ln(J_o / (J_0 + J_1)).
double entropy_term(double j0, double j1) {
  const double z = j0 + j1;
  double h = 0.0;
  if (j0 > 0.0) h -= j0 * std::log(j0 / z);
  if (j1 > 0.0) h -= j1 * std::log(j1 / z);
  return h;
}

using Pair = std::array<double, 2>;

std::vector<Pair> block_likelihoods(const std::vector<std::vector<std::size_t>>& comps,
                                    std::size_t vocab, double strength) {
  const auto q0 = emission(vocab, strength, false);
  const auto q1 = emission(vocab, strength, true);
  std::vector<Pair> out;
  out.reserve(comps.size());
  for (const auto& c : comps) out.push_back({multinomial(c, q0), multinomial(c, q1)});
  return out;
}

}  // namespace

double SyntheticSpec::argument_strength() const {
  const double share = (1.0 + info_asymmetry) / 2.0;
  return share == 0.0 ? 0.0 : precedent_signal * share;
}

double SyntheticSpec::precedent_facts_strength() const {
  const double share = (1.0 - info_asymmetry) / 2.0;
  return share == 0.0 ? 0.0 : precedent_signal * share;
}

double SyntheticSpec::base_rate_of(std::size_t article) const {
  if (base_rate.size() == 1) return base_rate.front();
  return base_rate.at(article);
}

std::uint64_t SyntheticSpec::enumeration_states() const {
  const double states = compositions_count(doc_length, vocab_size) *
                        compositions_count(doc_length * precedents_per_case, vocab_size) *
                        static_cast<double>(precedents_per_case + 1);
  return states >= 1e18 ? std::numeric_limits<std::uint64_t>::max()
                        : static_cast<std::uint64_t>(states);
}

void SyntheticSpec::validate() const {
  if (vocab_size < 1) throw Error("vocab_size must be at least 1");
  if (doc_length < 1) throw Error("doc_length must be at least 1");
  if (num_articles < 1) throw Error("articles must be at least 1");
  if (precedents_per_case < 1) throw Error("precedents_per_case must be at least 1");
  if (base_rate.size() != 1 && base_rate.size() != num_articles) {
    throw Error("base_rate needs one value or one per article");
  }
  for (const double r : base_rate) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error("base_rate values must lie in [0, 1]");
  }
  for (const double s : {facts_strength, precedent_signal}) {
    if (std::isnan(s) || s < 0.0) throw Error("strengths must be non-negative");
  }
  if (!(info_asymmetry >= -1.0 && info_asymmetry <= 1.0)) {
    throw Error("info_asymmetry must lie in [-1, 1]");
  }
  if (!(outcome_agreement >= 0.0 && outcome_agreement <= 1.0)) {
    throw Error("outcome_agreement must lie in [0, 1]");
  }
  if (enumeration_states() > kMaxEnumerationStates) {
    throw Error("spec is infeasible: exact enumeration needs " +
                std::to_string(enumeration_states()) + " states per article (limit " +
                std::to_string(kMaxEnumerationStates) + ")");
  }
}

SyntheticSpec SyntheticSpec::parse(std::string_view text) {
  SyntheticSpec spec;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error("spec line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "vocab_size") {
      spec.vocab_size = parse_size(key, value);
    } else if (key == "doc_length") {
      spec.doc_length = parse_size(key, value);
    } else if (key == "articles" || key == "num_articles" || key == "K") {
      spec.num_articles = parse_size(key, value);
    } else if (key == "precedents_per_case") {
      spec.precedents_per_case = parse_size(key, value);
    } else if (key == "base_rate") {
      spec.base_rate.clear();
      std::size_t start = 0;
      while (start <= value.size()) {
        auto comma = value.find(',', start);
        if (comma == std::string_view::npos) comma = value.size();
        spec.base_rate.push_back(parse_double(key, trim(value.substr(start, comma - start))));
        start = comma + 1;
      }
    } else if (key == "facts_strength") {
      spec.facts_strength = parse_double(key, value);
    } else if (key == "precedent_signal") {
      spec.precedent_signal = parse_double(key, value);
    } else if (key == "info_asymmetry") {
      spec.info_asymmetry = parse_double(key, value);
    } else if (key == "outcome_agreement") {
      spec.outcome_agreement = parse_double(key, value);
    } else if (key == "seed") {
      spec.seed = parse_size(key, value);
    } else {
      throw Error("spec line " + std::to_string(line_no) + ": unknown key '" +
                  std::string(key) + "'");
    }
  }
  return spec;
}

SyntheticSpec SyntheticSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open spec file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

json SyntheticSpec::to_json() const {
  auto number = [](double v) -> json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return json{{"vocab_size", vocab_size},
              {"doc_length", doc_length},
              {"articles", num_articles},
              {"precedents_per_case", precedents_per_case},
              {"base_rate", base_rate},
              {"facts_strength", number(facts_strength)},
              {"precedent_signal", number(precedent_signal)},
              {"info_asymmetry", info_asymmetry},
              {"outcome_agreement", outcome_agreement},
              {"seed", seed}};
}

std::vector<double> emission(std::size_t vocab_size, double strength, bool ruling) {
  std::vector<double> q(vocab_size, 0.0);
  if (vocab_size == 1) {
    q[0] = 1.0;
    return q;
  }
  if (std::isinf(strength)) {
    q[ruling ? vocab_size - 1 : 0] = 1.0;
    return q;
  }
  const double sign = ruling ? 1.0 : -1.0;
  std::vector<double> logit(vocab_size);
  for (std::size_t v = 0; v < vocab_size; ++v) {
    const double c = 2.0 * static_cast<double>(v) / static_cast<double>(vocab_size - 1) - 1.0;
    logit[v] = strength * sign * c;
  }
  const double top = *std::max_element(logit.begin(), logit.end());
  double z = 0.0;
  for (std::size_t v = 0; v < vocab_size; ++v) {
    q[v] = std::exp(logit[v] - top);
    z += q[v];
  }
  for (double& p : q) p /= z;
  return q;
}

double facts_posterior(const SyntheticSpec& spec, std::size_t article,
                       std::span<const std::size_t> counts) {
  if (counts.size() != spec.vocab_size) throw Error("count vector has wrong length");
  const double rho = spec.base_rate_of(article);
  const double j1 = rho * multinomial(counts, emission(spec.vocab_size, spec.facts_strength, true));
  const double j0 =
      (1.0 - rho) * multinomial(counts, emission(spec.vocab_size, spec.facts_strength, false));
  if (j0 + j1 <= 0.0) throw Error("count vector has zero probability under the spec");
  return j1 / (j0 + j1);
}

GroundTruth exact_entropies(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t vocab = spec.vocab_size;
  const std::size_t n_prec = spec.precedents_per_case;
  const auto facts_comps = compositions(spec.doc_length, vocab);
  const auto prec_comps = compositions(spec.doc_length * n_prec, vocab);

  const auto facts_lik = block_likelihoods(facts_comps, vocab, spec.facts_strength);
  const auto args_lik = block_likelihoods(prec_comps, vocab, spec.argument_strength());
  const auto pfacts_lik = block_likelihoods(prec_comps, vocab, spec.precedent_facts_strength());

  // Number of precedents marked violated, given the ruling.
  std::vector<Pair> marker_lik(n_prec + 1);
  for (std::size_t m = 0; m <= n_prec; ++m) {
    marker_lik[m] = {binomial(n_prec, m, 1.0 - spec.outcome_agreement),
                     binomial(n_prec, m, spec.outcome_agreement)};
  }

  GroundTruth truth;
  for (std::size_t k = 0; k < spec.num_articles; ++k) {
    const double rho = spec.base_rate_of(k);
    const Pair prior{1.0 - rho, rho};

    std::vector<Pair> facts_joint(facts_lik.size());
    double h_facts = 0.0;
    for (std::size_t i = 0; i < facts_lik.size(); ++i) {
      facts_joint[i] = {prior[0] * facts_lik[i][0], prior[1] * facts_lik[i][1]};
      h_facts += entropy_term(facts_joint[i][0], facts_joint[i][1]);
    }

    auto conditioned = [&](const std::vector<Pair>& text_lik) {
      std::vector<Pair> prec_joint;
      prec_joint.reserve(text_lik.size() * marker_lik.size());
      for (const auto& t : text_lik) {
        for (const auto& m : marker_lik) prec_joint.push_back({t[0] * m[0], t[1] * m[1]});
      }
      double h = 0.0;
      for (const auto& f : facts_joint) {
        if (f[0] == 0.0 && f[1] == 0.0) continue;
        for (const auto& p : prec_joint) h += entropy_term(f[0] * p[0], f[1] * p[1]);
      }
      return h;
    };

    const double h_halsbury = conditioned(args_lik);
    const double h_goodhart = conditioned(pfacts_lik);
    truth.per_article_h_facts.push_back(h_facts);
    truth.per_article_h_halsbury.push_back(h_halsbury);
    truth.per_article_h_goodhart.push_back(h_goodhart);
    truth.h_facts += h_facts;
    truth.h_halsbury += h_halsbury;
    truth.h_goodhart += h_goodhart;
  }
  truth.mi_goodhart = truth.h_facts - truth.h_goodhart;
  truth.mi_halsbury = truth.h_facts - truth.h_halsbury;
  return truth;
}

json to_json(const GroundTruth& t) {
  return json{{"units", "nats"},
              {"h_facts", t.h_facts},
              {"h_goodhart", t.h_goodhart},
              {"h_halsbury", t.h_halsbury},
              {"mi_goodhart", t.mi_goodhart},
              {"mi_halsbury", t.mi_halsbury},
              {"per_article",
               {{"h_facts", t.per_article_h_facts},
                {"h_goodhart", t.per_article_h_goodhart},
                {"h_halsbury", t.per_article_h_halsbury}}}};
}

SplitSizes default_splits(std::size_t n_cases) {
  SplitSizes s;
  s.validation = n_cases / 10;
  s.test = n_cases / 10;
  s.train = n_cases - s.validation - s.test;
  return s;
}

std::string symbol_word(std::size_t article, std::size_t symbol) {
  return "b" + std::to_string(article) + "w" + std::to_string(symbol);
}

namespace {

struct Samplers {
  std::vector<std::discrete_distribution<std::size_t>> facts;   // by ruling
  std::vector<std::discrete_distribution<std::size_t>> args;
  std::vector<std::discrete_distribution<std::size_t>> pfacts;

  explicit Samplers(const SyntheticSpec& spec) {
    for (const bool ruling : {false, true}) {
      auto make = [&](double s) {
        const auto q = emission(spec.vocab_size, s, ruling);
        return std::discrete_distribution<std::size_t>(q.begin(), q.end());
      };
      facts.push_back(make(spec.facts_strength));
      args.push_back(make(spec.argument_strength()));
      pfacts.push_back(make(spec.precedent_facts_strength()));
    }
  }
};

std::string sample_text(std::mt19937_64& rng, const SyntheticSpec& spec,
                        std::vector<std::discrete_distribution<std::size_t>>& dists,
                        const std::vector<std::uint8_t>& rulings) {
  std::string text;
  for (std::size_t k = 0; k < spec.num_articles; ++k) {
    auto& dist = dists[rulings[k]];
    for (std::size_t t = 0; t < spec.doc_length; ++t) {
      if (!text.empty()) text.push_back(' ');
      text += symbol_word(k, dist(rng));
    }
  }
  return text;
}

std::string case_id(corpus::Split split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%06zu", i);
  return std::string(corpus::to_string(split)) + buf;
}

}  // namespace

SyntheticCorpus generate(const SyntheticSpec& spec, const SplitSizes& sizes) {
  spec.validate();
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < spec.num_articles; ++k) labels.push_back(std::to_string(k + 1));

  SyntheticCorpus out;
  out.articles = ArticleSet(std::move(labels));
  Samplers samplers(spec);
  std::vector<corpus::Case> precedents;
  out.cases.reserve(sizes.total());
  precedents.reserve(sizes.total() * spec.precedents_per_case);

  const std::pair<corpus::Split, std::size_t> splits[] = {
      {corpus::Split::kTrain, sizes.train},
      {corpus::Split::kValidation, sizes.validation},
      {corpus::Split::kTest, sizes.test}};
  for (const auto& [split, count] : splits) {
    for (std::size_t i = 0; i < count; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                        static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(split), static_cast<std::uint32_t>(i),
                        static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
      std::mt19937_64 rng(seq);

      corpus::Case c;
      c.id = case_id(split, i);
      c.split = split;
      c.outcome.resize(spec.num_articles);
      for (std::size_t k = 0; k < spec.num_articles; ++k) {
        c.outcome[k] = std::bernoulli_distribution(spec.base_rate_of(k))(rng) ? 1 : 0;
      }
      c.facts = sample_text(rng, spec, samplers.facts, c.outcome);
      c.arguments = sample_text(rng, spec, samplers.args, c.outcome);

      for (std::size_t j = 0; j < spec.precedents_per_case; ++j) {
        corpus::Case p;
        p.id = c.id + "-p" + std::to_string(j);
        p.split = split;
        p.outcome.resize(spec.num_articles);
        for (std::size_t k = 0; k < spec.num_articles; ++k) {
          const bool agrees = std::bernoulli_distribution(spec.outcome_agreement)(rng);
          p.outcome[k] = (agrees ? c.outcome[k] : 1 - c.outcome[k]) ? 1 : 0;
        }
        p.arguments = sample_text(rng, spec, samplers.args, c.outcome);
        p.facts = sample_text(rng, spec, samplers.pfacts, c.outcome);
        c.cited_ids.push_back(p.id);
        precedents.push_back(std::move(p));
      }
      out.cases.push_back(std::move(c));
    }
  }
  for (auto& p : precedents) out.cases.push_back(std::move(p));
  out.graph = corpus::resolve_citations(out.cases);
  return out;
}

std::vector<corpus::RawDocument> to_raw_documents(const SyntheticCorpus& corpus) {
  std::vector<corpus::RawDocument> docs;
  docs.reserve(corpus.cases.size());
  for (const auto& c : corpus.cases) docs.push_back(corpus::to_raw_document(c, corpus.articles));
  return docs;
}

}  // namespace precedent::oracle
