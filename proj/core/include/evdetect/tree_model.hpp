#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evdetect/features.hpp"
#include "evdetect/series.hpp"

namespace evdetect {

enum class ModelKind { RandomForest, GradientBoosted };

/// "rf" / "gbdt"
std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "rf", "random_forest", "gbdt", "xgboost". Throws InvalidConfig.
ModelKind parse_model_kind(std::string_view text);

/// Split node (feature >= 0): rows with x[feature] <= threshold go left.
/// Leaf node (feature == -1): `value` is a class probability for forests
/// and an already-shrunk additive score for boosted trees.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Nodes in pre-order; node 0 is the root and children follow their parent.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  double evaluate(std::span<const double> row) const;
  /// Edges on the longest root-to-leaf path (a lone leaf has depth 0).
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct RandomForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 5;
  std::size_t features_per_split = 0;  ///< 0 means ceil(sqrt(feature count))
  bool bootstrap = true;
  std::uint64_t seed = 7;

  bool operator==(const RandomForestParams&) const = default;
};

struct GbdtParams {
  std::size_t n_rounds = 200;
  std::size_t max_depth = 6;
  double learning_rate = 0.1;
  double l2_leaf_regularization = 1.0;
  double min_child_weight = 1.0;
  double positive_class_weight = 1.0;
  std::uint64_t seed = 7;

  bool operator==(const GbdtParams&) const = default;
};

struct TrainParams {
  RandomForestParams forest;
  GbdtParams boosting;

  /// Throws InvalidParams.
  void validate() const;
  bool operator==(const TrainParams&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

struct TreeEnsembleModel {
  ModelKind kind = ModelKind::GradientBoosted;
  std::vector<DecisionTree> trees;
  double base_score = 0.0;  ///< log-odds prior (boosting only)
  std::vector<std::string> feature_schema;
  TrainParams params;
  /// Feature extraction settings, when known; lets `detect --stream`
  /// rebuild the extractor from the model alone.
  std::optional<FeatureConfig> feature_config;
  int format_version = kModelFormatVersion;

  bool operator==(const TreeEnsembleModel&) const = default;
};

struct TrainResult {
  TreeEnsembleModel model;
  /// Boosting: mean training log-loss before round 1 and after each round.
  std::vector<double> loss_per_round;
  /// All rows identical while labels are mixed; trees collapse to leaves.
  bool degenerate_data = false;
};

/// Bagged CART trees with Gini impurity and random feature subsets.
/// Throws ShapeMismatch, InvalidParams.
TrainResult train_random_forest(const FeatureMatrix& features, const ChargingLabelSeries& labels,
                                const TrainParams& params);

/// Second-order boosting on logistic loss with exact greedy splits.
/// Throws ShapeMismatch, InvalidParams.
TrainResult train_gbdt(const FeatureMatrix& features, const ChargingLabelSeries& labels,
                       const TrainParams& params);

TrainResult train_model(ModelKind kind, const FeatureMatrix& features,
                        const ChargingLabelSeries& labels, const TrainParams& params);

/// Probability for one row (no schema check). Throws UntrainedModel.
double predict_row(const TreeEnsembleModel& model, std::span<const double> row);

/// Throws SchemaMismatch if the columns differ from the model's schema and
/// UntrainedModel if there are no trees.
std::vector<double> predict_proba(const TreeEnsembleModel& model, const FeatureMatrix& features);

/// Label 1 iff probability > decision_threshold.
ChargingLabelSeries classify(std::span<const double> probabilities,
                             double decision_threshold = 0.5);
ChargingLabelSeries classify(const TreeEnsembleModel& model, const FeatureMatrix& features,
                             double decision_threshold = 0.5);

/// Structural checks: child links, feature indices, depth limit.
/// Throws CorruptModel.
void validate_model(const TreeEnsembleModel& model);

}  // namespace evdetect
