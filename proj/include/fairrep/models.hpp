#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "fairrep/types.hpp"

namespace fairrep {

enum class Family { logit, knn, svm_linear, random_forest, mlp };

std::string to_string(Family family);
/// Accepts the enum names plus the short forms "svm", "rf", "nn". Throws ConfigError.
Family parse_family(const std::string& name);

/// Family-specific hyperparameters, stored as text and read with defaults.
///
///   logit          l2=1.0 epochs=200 lr=0.1
///   svm_linear     C=1.0 epochs=200 lr=0.1
///   knn            k=5
///   random_forest  trees=20 max_depth=6 (or "inf") max_features=sqrt(d) bootstrap=1
///   mlp            hidden=16 (colon-separated widths, e.g. 32:16) epochs=50 lr=0.01 batch=32
struct ModelSpec {
  Family family = Family::logit;
  std::map<std::string, std::string> hyperparameters;
  std::uint64_t seed = 0;

  double param(const std::string& key, double fallback) const;
  std::vector<int> hidden_widths() const;
  /// Throws ConfigError on unknown keys or non-positive values.
  void validate() const;
  /// "k=5,C=1" style; empty string gives no overrides.
  static std::map<std::string, std::string> parse_hyperparameters(const std::string& text);
};

struct LinearParams {
  Vector weights;
  double bias = 0.0;
};

struct MlpParams {
  std::vector<Matrix> weights;  ///< layer l maps width[l] -> width[l+1]
  std::vector<Vector> biases;
};

struct KnnParams {
  Matrix points;
  Vector labels;
  int k = 5;
};

struct TreeNode {
  int feature = -1;  ///< -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  ///< fraction of positives reaching the node
};

/// CART tree on Gini impurity; x[feature] <= threshold goes left.
class DecisionTree {
 public:
  struct Options {
    int max_depth = 0;     ///< 0 for unlimited
    int max_features = 0;  ///< 0 for all
  };

  static DecisionTree fit(const Matrix& x, const Vector& y, const IndexList& rows, const Options& options,
                          Rng& rng);
  static DecisionTree fit(const Matrix& x, const Vector& y, const Options& options);

  double score(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<TreeNode> nodes_;
  friend class TreeBuilder;
};

struct ForestParams {
  std::vector<DecisionTree> trees;
};

struct ConstantParams {
  double score = 0.0;
};

/// Fitted classifier. Immutable after train(); predict is a pure function of
/// the fitted parameters and the input row.
class TrainedModel {
 public:
  using Params = std::variant<ConstantParams, LinearParams, MlpParams, KnnParams, ForestParams>;

  TrainedModel(Family family, Params params, Eigen::Index dims, int iterations, bool converged)
      : family_(family), params_(std::move(params)), dims_(dims), iterations_(iterations),
        converged_(converged) {}

  Family family() const { return family_; }
  const Params& params() const { return params_; }
  Eigen::Index dims() const { return dims_; }
  int iterations() const { return iterations_; }
  bool converged() const { return converged_; }
  /// Training data held a single class.
  bool is_constant() const { return std::holds_alternative<ConstantParams>(params_); }

 private:
  Family family_;
  Params params_;
  Eigen::Index dims_;
  int iterations_;
  bool converged_;
};

/// Fits `spec` on (features, labels). Deterministic in spec.seed. A single-class
/// training set yields a constant predictor. Throws std::invalid_argument on an
/// empty set, non-finite features or knn with k larger than the set.
TrainedModel train(const ModelSpec& spec, const Matrix& features, const BinaryVector& labels);

/// Scores in [0, 1]: probability (logit, mlp), squashed margin (svm),
/// neighbour vote fraction (knn), mean leaf frequency (forest).
Vector predict_scores(const TrainedModel& model, const Matrix& features);

/// Labels at the 0.5 score threshold; a score of exactly 0.5 predicts 1.
BinaryVector predict(const TrainedModel& model, const Matrix& features);

/// Per-row thresholds: row i predicts 1 iff score_i >= thresholds_i.
BinaryVector threshold_scores(const Vector& scores, const Vector& thresholds);

/// Fraction of exact matches. Throws std::invalid_argument on an empty set.
double accuracy(const BinaryVector& predictions, const BinaryVector& labels);
double accuracy(const TrainedModel& model, const Matrix& features, const BinaryVector& labels);

/// Regularized mean logistic loss and its gradient with respect to
/// (weights, bias), the objective minimized by the logit family:
///   mean(log(1 + exp(-y' z))) + l2 / (2 n) * |w|^2,  z = X w + b.
struct LossGradient {
  double loss = 0.0;
  Vector grad_weights;
  double grad_bias = 0.0;
};
LossGradient logistic_objective(const Matrix& x, const Vector& y, const LinearParams& params, double l2);

}  // namespace fairrep
