#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "textalpha/common.hpp"
#include "textalpha/features.hpp"

namespace textalpha {

struct TrainingExample {
  SparseVector features;
  PerformanceClass label = PerformanceClass::Average;
};

struct PredictionRecord {
  std::string id;
  ClassProbabilities probabilities{};
  PerformanceClass predicted = PerformanceClass::Under;
};

PredictionRecord make_prediction(std::string id, const ClassProbabilities& probabilities);

/// Throws DataError unless every class occurs at least once.
void require_all_classes(const std::vector<TrainingExample>& examples);

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

struct LogisticHyperparams {
  double learning_rate = 0.1;
  int epochs = 50;
  double l2 = 1e-4;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
};

struct LogisticModel {
  std::size_t dim = 0;
  std::vector<double> weights;  // kNumClasses x dim, row-major
  std::array<double, kNumClasses> bias{};
  LogisticHyperparams hyperparams;
  std::vector<double> epoch_loss;  // full objective after each epoch

  static LogisticModel zeros(std::size_t dim, LogisticHyperparams hp = {});

  double& weight(int k, std::size_t j) { return weights[static_cast<std::size_t>(k) * dim + j]; }
  double weight(int k, std::size_t j) const { return weights[static_cast<std::size_t>(k) * dim + j]; }
  double weight_norm() const;

  std::array<double, kNumClasses> logits(const SparseVector& x) const;

  std::string to_json() const;
  static LogisticModel from_json(const std::string& text);
};

struct LogisticObjective {
  double loss = 0.0;             // mean cross-entropy + (l2/2)||W||^2
  std::vector<double> grad_w;    // same layout as weights
  std::array<double, kNumClasses> grad_b{};
};

/// Full-batch objective and analytic gradient.
LogisticObjective logistic_objective(const LogisticModel& model, const std::vector<TrainingExample>& examples,
                                     double l2);

/// Seeded shuffled mini-batch gradient descent from a zero initialisation.
LogisticModel train_logistic(const std::vector<TrainingExample>& examples, std::size_t dim,
                             const LogisticHyperparams& hp = {});

/// Throws UsageError on a dimension mismatch.
PredictionRecord predict_logistic(const LogisticModel& model, const SparseVector& x, std::string id = {});

// ---------------------------------------------------------------------------
// Gradient-boosted regression trees with a softmax objective
// ---------------------------------------------------------------------------

struct BoostHyperparams {
  int rounds = 100;
  int max_depth = 4;
  double eta = 0.1;
  double lambda = 1.0;
  std::size_t feature_cap = 1000;
  std::uint64_t seed = 42;
};

struct TreeNode {
  int feature = -1;  // column into BoostedModel::features; -1 for a leaf
  double threshold = 0.0;  // x < threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by eta
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double evaluate(const std::vector<double>& dense_row) const;
  static RegressionTree constant(double value) { return RegressionTree{{TreeNode{-1, 0.0, -1, -1, value}}}; }
};

struct BoostedModel {
  std::size_t dim = 0;                  // input (vocabulary) dimension
  std::vector<std::size_t> features;    // vocabulary index per dense column
  std::vector<std::array<RegressionTree, kNumClasses>> rounds;
  BoostHyperparams hyperparams;
  std::vector<double> round_loss;       // mean training log-loss; [0] before the first round

  /// Columns for the given sparse input, zero where absent.
  std::vector<double> densify(const SparseVector& x) const;
  std::array<double, kNumClasses> scores(const SparseVector& x) const;

  std::string to_json() const;
  static BoostedModel from_json(const std::string& text);
};

/// Columns = the feature_cap input indices with the most nonzero training
/// entries (ties by index). Per round and class, grows a depth-limited tree on
/// softmax gradients g = p - y and hessians h = p(1 - p) by exact greedy
/// splits. Stops early when every tree of a round has no positive-gain root split.
BoostedModel train_boosted(const std::vector<TrainingExample>& examples, std::size_t dim,
                           const BoostHyperparams& hp = {});

PredictionRecord predict_boosted(const BoostedModel& model, const SparseVector& x, std::string id = {});

/// Mean multiclass log-loss of softmax(scores) against labels.
double mean_log_loss(const std::vector<std::array<double, kNumClasses>>& scores,
                     const std::vector<PerformanceClass>& labels);

}  // namespace textalpha
