#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "precedent/articles.hpp"
#include "precedent/features.hpp"

namespace precedent::models {

// Probabilities are kept inside [eps, 1 - eps] so every log-loss is finite.
inline constexpr double kProbabilityEpsilon = 1e-7;

double sigmoid(double x) noexcept;
double clamp_probability(double p) noexcept;

// -[y ln p + (1-y) ln(1-p)] summed over articles, with clamped p.
double log_loss(std::span<const double> probs, const Outcome& outcome);

struct TrainingConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.01;
  // 0 means full batch.
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  // Keep the epoch with the lowest validation cross-entropy.
  bool early_stopping = true;
};

nlohmann::json to_json(const TrainingConfig& c);
TrainingConfig training_config_from_json(const nlohmann::json& j);

struct Example {
  SparseVector features;
  Outcome outcome;
};

struct TrainingReport {
  // Mean summed cross-entropy (nats) per epoch; index 0 is the initial model.
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t selected_epoch = 0;
};

// K independent logistic regressions over hashed n-gram features.
class OutcomeModel {
 public:
  OutcomeModel() = default;
  OutcomeModel(FeatureSpec spec, std::size_t num_articles);

  std::size_t num_articles() const noexcept { return bias_.size(); }
  const FeatureSpec& feature_spec() const noexcept { return spec_; }

  std::vector<double> logits(const SparseVector& x) const;
  std::vector<double> predict_proba(const SparseVector& x) const;
  std::vector<double> predict_proba(const bundles::ConditioningBundle& b) const;

  double bias(std::size_t article) const { return bias_.at(article); }
  double weight(std::size_t article, std::uint32_t feature) const;
  void set_bias(std::size_t article, double value);
  void set_weight(std::size_t article, std::uint32_t feature, double value);
  std::size_t active_features() const noexcept { return rows_.size(); }

  TrainingConfig training;
  std::size_t selected_epoch = 0;
  std::size_t train_examples = 0;

  nlohmann::json to_json() const;
  static OutcomeModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static OutcomeModel load(const std::filesystem::path& path);

 private:
  FeatureSpec spec_;
  std::vector<double> bias_;
  std::unordered_map<std::uint32_t, std::size_t> rows_;
  std::vector<double> weights_;  // row-major, one row of K per active feature
};

// Minibatch (sub)gradient descent on the summed binary cross-entropy with a
// fixed learning rate, starting from all-zero parameters. Deterministic given
// the seed. Throws Error if the loss becomes non-finite.
OutcomeModel train(std::span<const Example> train_set,
                   std::span<const Example> validation_set,
                   std::size_t num_articles, const FeatureSpec& spec,
                   const TrainingConfig& config, TrainingReport* report = nullptr);

}  // namespace precedent::models
