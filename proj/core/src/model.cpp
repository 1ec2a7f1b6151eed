#include "precedent/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "precedent/error.hpp"

namespace precedent::models {

using nlohmann::json;

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

double log_loss(std::span<const double> probs, const Outcome& outcome) {
  double loss = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = clamp_probability(probs[k]);
    loss -= outcome[k] ? std::log(p) : std::log1p(-p);
  }
  return loss;
}

json to_json(const TrainingConfig& c) {
  return json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"early_stopping", c.early_stopping}};
}

TrainingConfig training_config_from_json(const json& j) {
  TrainingConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.early_stopping = j.value("early_stopping", c.early_stopping);
  return c;
}

OutcomeModel::OutcomeModel(FeatureSpec spec, std::size_t num_articles)
    : spec_(std::move(spec)), bias_(num_articles, 0.0) {
  spec_.validate();
  if (num_articles == 0) throw Error("model needs at least one article");
}

std::vector<double> OutcomeModel::logits(const SparseVector& x) const {
  const std::size_t k_count = num_articles();
  std::vector<double> z = bias_;
  for (std::size_t i = 0; i < x.nnz(); ++i) {
    const auto it = rows_.find(x.indices[i]);
    if (it == rows_.end()) continue;
    const double* row = weights_.data() + it->second * k_count;
    for (std::size_t k = 0; k < k_count; ++k) z[k] += row[k] * x.values[i];
  }
  return z;
}

std::vector<double> OutcomeModel::predict_proba(const SparseVector& x) const {
  auto p = logits(x);
  for (double& v : p) v = clamp_probability(sigmoid(v));
  return p;
}

std::vector<double> OutcomeModel::predict_proba(
    const bundles::ConditioningBundle& b) const {
  return predict_proba(featurize(b, spec_));
}

double OutcomeModel::weight(std::size_t article, std::uint32_t feature) const {
  if (article >= num_articles()) throw Error("article index out of range");
  const auto it = rows_.find(feature);
  if (it == rows_.end()) return 0.0;
  return weights_[it->second * num_articles() + article];
}

void OutcomeModel::set_bias(std::size_t article, double value) {
  bias_.at(article) = value;
}

void OutcomeModel::set_weight(std::size_t article, std::uint32_t feature,
                              double value) {
  if (article >= num_articles()) throw Error("article index out of range");
  if (feature >= spec_.dimension()) throw Error("feature index out of range");
  auto [it, inserted] = rows_.try_emplace(feature, rows_.size());
  if (inserted) weights_.resize(weights_.size() + num_articles(), 0.0);
  weights_[it->second * num_articles() + article] = value;
}

json OutcomeModel::to_json() const {
  std::vector<std::uint32_t> features;
  features.reserve(rows_.size());
  for (const auto& [f, row] : rows_) features.push_back(f);
  std::sort(features.begin(), features.end());
  json weights = json::array();
  for (const auto f : features) {
    const auto row = rows_.at(f);
    std::vector<double> w(weights_.begin() + static_cast<std::ptrdiff_t>(row * num_articles()),
                          weights_.begin() + static_cast<std::ptrdiff_t>((row + 1) * num_articles()));
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) continue;
    weights.push_back({{"feature", f}, {"w", std::move(w)}});
  }
  return json{{"format", "precedent-logistic-v1"},
              {"num_articles", num_articles()},
              {"feature_spec", models::to_json(spec_)},
              {"training", models::to_json(training)},
              {"selected_epoch", selected_epoch},
              {"train_examples", train_examples},
              {"bias", bias_},
              {"weights", std::move(weights)}};
}

OutcomeModel OutcomeModel::from_json(const json& j) {
  if (j.value("format", std::string()) != "precedent-logistic-v1") {
    throw Error("unrecognized model checkpoint format");
  }
  OutcomeModel m(feature_spec_from_json(j.at("feature_spec")),
                 j.at("num_articles").get<std::size_t>());
  m.training = training_config_from_json(j.at("training"));
  m.selected_epoch = j.value("selected_epoch", std::size_t{0});
  m.train_examples = j.value("train_examples", std::size_t{0});
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (bias.size() != m.num_articles()) throw Error("checkpoint bias has wrong length");
  m.bias_ = bias;
  for (const auto& entry : j.at("weights")) {
    const auto f = entry.at("feature").get<std::uint32_t>();
    const auto w = entry.at("w").get<std::vector<double>>();
    if (w.size() != m.num_articles()) throw Error("checkpoint weight row has wrong length");
    for (std::size_t k = 0; k < w.size(); ++k) m.set_weight(k, f, w[k]);
  }
  return m;
}

void OutcomeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

OutcomeModel OutcomeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  return from_json(json::parse(in));
}

namespace {

// Examples re-indexed onto the features seen in training.
struct CompactSet {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> local;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;  // row-major N x K

  std::size_t size() const noexcept { return offsets.size() - 1; }
};

CompactSet compact(std::span<const Example> examples,
                   const std::unordered_map<std::uint32_t, std::uint32_t>& local_of,
                   std::size_t k_count) {
  CompactSet set;
  set.offsets.reserve(examples.size() + 1);
  set.labels.reserve(examples.size() * k_count);
  for (const auto& ex : examples) {
    if (ex.outcome.size() != k_count) {
      throw Error("training example outcome has length " +
                  std::to_string(ex.outcome.size()) + ", expected " +
                  std::to_string(k_count));
    }
    for (std::size_t i = 0; i < ex.features.nnz(); ++i) {
      const auto it = local_of.find(ex.features.indices[i]);
      if (it == local_of.end()) continue;
      set.local.push_back(it->second);
      set.values.push_back(ex.features.values[i]);
    }
    set.offsets.push_back(set.local.size());
    for (const auto y : ex.outcome) set.labels.push_back(y ? 1 : 0);
  }
  return set;
}

struct Parameters {
  std::vector<double> weights;  // n_local x K
  std::vector<double> bias;     // K
};

void forward(const CompactSet& set, std::size_t i, const Parameters& params,
             std::size_t k_count, double* z) {
  std::copy(params.bias.begin(), params.bias.end(), z);
  for (std::size_t e = set.offsets[i]; e < set.offsets[i + 1]; ++e) {
    const double* row = params.weights.data() + std::size_t{set.local[e]} * k_count;
    const double v = set.values[e];
    for (std::size_t k = 0; k < k_count; ++k) z[k] += row[k] * v;
  }
}

double mean_loss(const CompactSet& set, const Parameters& params, std::size_t k_count) {
  if (set.size() == 0) return 0.0;
  std::vector<double> z(k_count);
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    forward(set, i, params, k_count, z.data());
    for (std::size_t k = 0; k < k_count; ++k) {
      const double p = clamp_probability(sigmoid(z[k]));
      total -= set.labels[i * k_count + k] ? std::log(p) : std::log1p(-p);
    }
  }
  return total / static_cast<double>(set.size());
}

}  // namespace

OutcomeModel train(std::span<const Example> train_set,
                   std::span<const Example> validation_set, std::size_t num_articles,
                   const FeatureSpec& spec, const TrainingConfig& config,
                   TrainingReport* report) {
  if (train_set.empty()) throw Error("training needs at least one example");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error("learning rate must be a positive finite number");
  }
  spec.validate();
  const std::size_t k_count = num_articles;

  std::vector<std::uint32_t> active;
  for (const auto& ex : train_set) {
    active.insert(active.end(), ex.features.indices.begin(), ex.features.indices.end());
  }
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  std::unordered_map<std::uint32_t, std::uint32_t> local_of;
  local_of.reserve(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    local_of.emplace(active[i], static_cast<std::uint32_t>(i));
  }

  const CompactSet train_data = compact(train_set, local_of, k_count);
  const CompactSet valid_data = compact(validation_set, local_of, k_count);
  const bool select_on_validation = config.early_stopping && valid_data.size() > 0;

  Parameters params{std::vector<double>(active.size() * k_count, 0.0),
                    std::vector<double>(k_count, 0.0)};
  Parameters best = params;

  TrainingReport local_report;
  auto record = [&](std::size_t epoch) {
    const double train_loss = mean_loss(train_data, params, k_count);
    if (!std::isfinite(train_loss)) {
      std::ostringstream msg;
      msg << "non-finite training loss at epoch " << epoch
          << "; the learning rate (" << config.learning_rate << ") is too high";
      throw Error(msg.str());
    }
    local_report.train_loss.push_back(train_loss);
    if (valid_data.size() > 0) {
      const double valid_loss = mean_loss(valid_data, params, k_count);
      local_report.validation_loss.push_back(valid_loss);
      if (select_on_validation &&
          valid_loss < local_report.validation_loss[local_report.selected_epoch]) {
        local_report.selected_epoch = epoch;
        best = params;
      }
    }
  };
  record(0);

  const std::size_t n = train_data.size();
  const std::size_t batch =
      config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);

  std::vector<double> grad(params.weights.size(), 0.0);
  std::vector<std::uint8_t> touched_flag(active.size(), 0);
  std::vector<std::uint32_t> touched;
  std::vector<double> residual(batch * k_count);
  std::vector<double> bias_grad(k_count);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const double step = config.learning_rate / static_cast<double>(stop - start);
      std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        double* r = residual.data() + (b - start) * k_count;
        forward(train_data, i, params, k_count, r);
        for (std::size_t k = 0; k < k_count; ++k) {
          r[k] = sigmoid(r[k]) - train_data.labels[i * k_count + k];
          bias_grad[k] += r[k];
        }
      }
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const double* r = residual.data() + (b - start) * k_count;
        for (std::size_t e = train_data.offsets[i]; e < train_data.offsets[i + 1]; ++e) {
          const auto f = train_data.local[e];
          if (!touched_flag[f]) {
            touched_flag[f] = 1;
            touched.push_back(f);
          }
          double* g = grad.data() + std::size_t{f} * k_count;
          const double v = train_data.values[e];
          for (std::size_t k = 0; k < k_count; ++k) g[k] += r[k] * v;
        }
      }
      for (const auto f : touched) {
        double* g = grad.data() + std::size_t{f} * k_count;
        double* w = params.weights.data() + std::size_t{f} * k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
          w[k] -= step * g[k];
          g[k] = 0.0;
        }
        touched_flag[f] = 0;
      }
      touched.clear();
      for (std::size_t k = 0; k < k_count; ++k) params.bias[k] -= step * bias_grad[k];
    }
    record(epoch);
  }

  if (!select_on_validation) {
    best = params;
    local_report.selected_epoch = config.epochs;
  }

  OutcomeModel model(spec, k_count);
  for (std::size_t k = 0; k < k_count; ++k) model.set_bias(k, best.bias[k]);
  for (std::size_t f = 0; f < active.size(); ++f) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const double w = best.weights[f * k_count + k];
      if (w != 0.0) model.set_weight(k, active[f], w);
    }
  }
  model.training = config;
  model.selected_epoch = local_report.selected_epoch;
  model.train_examples = n;
  if (report) *report = std::move(local_report);
  return model;
}

}  // namespace precedent::models
