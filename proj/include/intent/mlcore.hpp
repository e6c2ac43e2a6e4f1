#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "intent/common.hpp"
#include "intent/labels.hpp"

namespace intent::ml {

class MlError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  /// Copy holding only the given columns, in the given order.
  Matrix select_columns(std::span<const std::size_t> cols) const;
  Matrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class LearnerKind { decision_tree, random_forest, adaboost, linear_svm, gaussian_nb };

std::string_view learner_name(LearnerKind k);
std::optional<LearnerKind> learner_from_name(std::string_view name);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::random_forest;
  int max_depth = 0;                  // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t n_trees = 200;
  int max_features = 0;               // 0 = all for a tree, ceil(sqrt(p)) for a forest
  std::size_t n_rounds = 200;         // AdaBoost stumps
  double lambda = 1e-4;               // SVM L2 strength
  std::size_t epochs = 50;            // SVM passes
  double var_floor = 1e-9;            // naive Bayes
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static LearnerSpec from_json(const nlohmann::json& j);
};

/// Stateless seed derivation (splitmix64 finalizer over seed and stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// A trained multi-class classifier. Binary problems use classes {0, 1} and
/// read the positive-class probability as their confidence.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t num_features() const = 0;
  /// Writes one score per class into out; scores are in [0,1] and sum to 1.
  virtual void predict_proba(std::span<const double> x, std::span<double> out) const = 0;
  virtual nlohmann::json to_json() const = 0;
  /// True when training saw a single class and the model is constant.
  virtual bool is_constant() const { return false; }

  std::vector<double> predict_proba(std::span<const double> x) const;
  /// Arg-max class, ties to the lowest index.
  std::size_t predict(std::span<const double> x) const;
};

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

/// Always predicts one class.
class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(std::size_t n_classes, std::size_t n_features, std::size_t cls)
      : n_classes_(n_classes), n_features_(n_features), cls_(cls) {}
  std::size_t num_classes() const override { return n_classes_; }
  std::size_t num_features() const override { return n_features_; }
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  bool is_constant() const override { return true; }
  std::size_t predicted_class() const { return cls_; }

 private:
  std::size_t n_classes_, n_features_, cls_;
};

/// CART classification tree with Gini impurity and sample weights.
class DecisionTree final : public Classifier {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;    // weighted samples reaching the node
    double impurity = 0.0;  // Gini
  };

  /// weights may be empty (all ones). Rows with zero weight are ignored.
  /// max_features = 0 evaluates every feature at every node.
  static DecisionTree fit(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                          std::span<const double> weights, int max_depth, std::size_t min_samples_split,
                          std::size_t max_features, std::uint64_t seed);

  std::size_t num_classes() const override { return n_classes_; }
  std::size_t num_features() const override { return n_features_; }
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  static DecisionTree from_json(const nlohmann::json& j);

  /// Index of the leaf reached by x.
  std::size_t leaf_of(std::span<const double> x) const;
  /// Weighted Gini decrease per feature, divided by the root weight.
  std::vector<double> impurity_decrease() const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::span<const double> leaf_distribution(std::size_t node) const {
    return {values_.data() + node * n_classes_, n_classes_};
  }
  std::size_t depth() const;

 private:
  friend class TreeBuilder;
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<Node> nodes_;
  std::vector<double> values_;  // per node class distribution (normalized)
};

/// Bootstrap sample as integer counts per row.
std::vector<double> bootstrap_weights(std::size_t n, std::uint64_t seed);

/// Bagged CART trees; each tree votes for its leaf's arg-max class.
class RandomForest final : public Classifier {
 public:
  static RandomForest fit(const Matrix& X, std::span<const int> y, std::size_t n_classes, const LearnerSpec& spec);

  std::size_t num_classes() const override { return n_classes_; }
  std::size_t num_features() const override { return n_features_; }
  /// Vote fractions.
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  static RandomForest from_json(const nlohmann::json& j);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  /// Mean over trees of each tree's impurity decrease.
  std::vector<double> feature_importances() const;
  /// Seed used for tree t's bootstrap and feature sampling.
  static std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t t);

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

/// Discrete AdaBoost over depth-1 stumps (binary only).
class AdaBoost final : public Classifier {
 public:
  struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1: predict positive when x > threshold
    double alpha = 0.0;
  };

  static AdaBoost fit(const Matrix& X, std::span<const int> y, const LearnerSpec& spec);

  std::size_t num_classes() const override { return 2; }
  std::size_t num_features() const override { return n_features_; }
  /// Positive probability = sigmoid(margin).
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  static AdaBoost from_json(const nlohmann::json& j);

  double margin(std::span<const double> x) const;
  const std::vector<Stump>& stumps() const { return stumps_; }
  /// Weighted training error of each accepted round.
  const std::vector<double>& round_errors() const { return errors_; }

 private:
  std::size_t n_features_ = 0;
  std::vector<Stump> stumps_;
  std::vector<double> errors_;
  double prior_positive_ = 0.5;  // used only when no stump was accepted
};

/// Linear SVM (hinge + L2) trained by Pegasos subgradient steps on
/// standardized features.
class LinearSvm final : public Classifier {
 public:
  static LinearSvm fit(const Matrix& X, std::span<const int> y, const LearnerSpec& spec);

  std::size_t num_classes() const override { return 2; }
  std::size_t num_features() const override { return mean_.size(); }
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  static LinearSvm from_json(const nlohmann::json& j);

  double margin(std::span<const double> x) const;

 private:
  std::vector<double> mean_, scale_, w_;  // w_ has one extra entry for the bias
};

class GaussianNb final : public Classifier {
 public:
  static GaussianNb fit(const Matrix& X, std::span<const int> y, std::size_t n_classes, double var_floor);

  std::size_t num_classes() const override { return prior_.size(); }
  std::size_t num_features() const override { return n_features_; }
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  static GaussianNb from_json(const nlohmann::json& j);

 private:
  std::size_t n_features_ = 0;
  std::vector<double> prior_;
  std::vector<double> mean_, var_;  // class-major
};

/// One binary model per class; scores are normalized confidences.
class OneVsRest final : public Classifier {
 public:
  static OneVsRest fit(const Matrix& X, std::span<const int> y, std::size_t n_classes, const LearnerSpec& spec);

  std::size_t num_classes() const override { return models_.size(); }
  std::size_t num_features() const override { return n_features_; }
  using Classifier::predict_proba;
  void predict_proba(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json to_json() const override;
  static OneVsRest from_json(const nlohmann::json& j);

 private:
  std::size_t n_features_ = 0;
  std::vector<std::unique_ptr<Classifier>> models_;
};

/// Trains the learner named by spec. A label vector with one class yields a
/// ConstantClassifier. Binary-only learners go through one-vs-rest when
/// n_classes > 2.
std::unique_ptr<Classifier> train_classifier(const LearnerSpec& spec, const Matrix& X, std::span<const int> y,
                                             std::size_t n_classes);

using LabelMatrix = std::vector<BinaryLabels>;

struct LabelPrediction {
  LabelSet labels;
  std::array<double, kNumIntents> confidence{};
};

/// Picks the highest-confidence label (ties to the lowest ordinal) when the
/// set is empty.
LabelSet non_empty_or_best(LabelSet s, std::span<const double> confidence);

/// Classifier chain, or binary relevance when `chained` is false.
class ChainModel {
 public:
  using Order = std::array<std::size_t, kNumIntents>;
  static Order identity_order();

  /// Model i sees the base features plus the true 0/1 labels of the i labels
  /// before it in `order`; prediction feeds back predicted labels instead.
  static ChainModel train(const LearnerSpec& spec, const Matrix& X, const LabelMatrix& Y, const Order& order,
                          bool chained = true);

  LabelPrediction predict(std::span<const double> x) const;
  bool chained() const { return chained_; }
  const Order& order() const { return order_; }
  const Classifier& model_at(std::size_t chain_position) const { return *models_.at(chain_position); }

  nlohmann::json to_json() const;
  static ChainModel from_json(const nlohmann::json& j);

 private:
  LearnerSpec spec_;
  Order order_{};
  bool chained_ = true;
  std::size_t n_features_ = 0;
  std::vector<std::unique_ptr<Classifier>> models_;
};

ChainModel chain_train(const LearnerSpec& spec, const Matrix& X, const LabelMatrix& Y,
                       const ChainModel::Order& order = ChainModel::identity_order());
ChainModel binary_relevance_train(const LearnerSpec& spec, const Matrix& X, const LabelMatrix& Y);

/// Label powerset: each distinct training combination is one class.
class PowersetModel {
 public:
  static PowersetModel train(const LearnerSpec& spec, const Matrix& X, std::span<const LabelSet> labelsets);

  LabelPrediction predict(std::span<const double> x) const;
  const std::vector<LabelSet>& classes() const { return classes_; }
  const Classifier& classifier() const { return *model_; }
  const LearnerSpec& spec() const { return spec_; }

  nlohmann::json to_json() const;
  static PowersetModel from_json(const nlohmann::json& j);

 private:
  LearnerSpec spec_;
  std::vector<LabelSet> classes_;
  std::unique_ptr<Classifier> model_;
};

/// ML-kNN with Euclidean distance; neighbor ties go to the lower training index.
class MlKnnModel {
 public:
  static MlKnnModel train(const Matrix& X, const LabelMatrix& Y, std::size_t k = 10, double s = 1.0);

  LabelPrediction predict(std::span<const double> x) const;
  /// Indices of the k nearest training rows, nearest first. `skip` excludes one row.
  std::vector<std::size_t> neighbors(std::span<const double> x, std::optional<std::size_t> skip = {}) const;

  double prior(std::size_t label) const { return prior_[label]; }
  /// Training rows having (has_label=1) or lacking the label with exactly j
  /// neighbors that carry it.
  double count(std::size_t label, int has_label, std::size_t j) const;
  std::size_t k() const { return k_; }
  double smoothing() const { return s_; }

  nlohmann::json to_json() const;
  static MlKnnModel from_json(const nlohmann::json& j);

 private:
  Matrix X_;
  LabelMatrix Y_;
  std::size_t k_ = 10;
  double s_ = 1.0;
  std::array<double, kNumIntents> prior_{};
  std::vector<double> counts_;  // [label][has][j], size 12 * 2 * (k+1)
};

/// Max-normalized mean Gini decrease per feature of a forest-backed
/// powerset model. Throws MlError if the model holds no random forest.
std::vector<double> feature_importance(const PowersetModel& model);

}  // namespace intent::ml
