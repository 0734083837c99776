#include "evdetect/tree_model.hpp"

#include <algorithm>
#include <cmath>

namespace evdetect {

namespace {

double sigmoid(double margin) {
  if (margin >= 0.0) {
    return 1.0 / (1.0 + std::exp(-margin));
  }
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::RandomForest ? "rf" : "gbdt";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "rf" || text == "random_forest") return ModelKind::RandomForest;
  if (text == "gbdt" || text == "xgboost") return ModelKind::GradientBoosted;
  throw Error(ErrorCode::InvalidConfig, "model must be 'gbdt' or 'rf'");
}

double DecisionTree::evaluate(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes[i].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) {
    return 0;
  }
  // Children always have larger indices than their parent.
  std::vector<std::size_t> depth_of(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes[i].is_leaf()) {
      depth_of[static_cast<std::size_t>(nodes[i].left)] = depth_of[i] + 1;
      depth_of[static_cast<std::size_t>(nodes[i].right)] = depth_of[i] + 1;
    }
  }
  return deepest;
}

void TrainParams::validate() const {
  const auto& f = forest;
  const auto& b = boosting;
  const bool ok = f.n_trees >= 1 && f.max_depth >= 1 && f.min_samples_leaf >= 1 &&
                  b.n_rounds >= 1 && b.max_depth >= 1 && b.learning_rate > 0.0 &&
                  b.learning_rate <= 1.0 && b.l2_leaf_regularization >= 0.0 &&
                  b.min_child_weight >= 0.0 && b.positive_class_weight > 0.0 &&
                  std::isfinite(b.l2_leaf_regularization) &&
                  std::isfinite(b.positive_class_weight);
  if (!ok) {
    throw Error(ErrorCode::InvalidParams, "training parameters out of range");
  }
}

TrainResult train_model(ModelKind kind, const FeatureMatrix& features,
                        const ChargingLabelSeries& labels, const TrainParams& params) {
  return kind == ModelKind::RandomForest ? train_random_forest(features, labels, params)
                                         : train_gbdt(features, labels, params);
}

double predict_row(const TreeEnsembleModel& model, std::span<const double> row) {
  if (model.trees.empty()) {
    throw Error(ErrorCode::UntrainedModel, "model has no trees");
  }
  if (model.kind == ModelKind::RandomForest) {
    double sum = 0.0;
    for (const auto& tree : model.trees) {
      sum += tree.evaluate(row);
    }
    return std::clamp(sum / static_cast<double>(model.trees.size()), 0.0, 1.0);
  }
  double margin = model.base_score;
  for (const auto& tree : model.trees) {
    margin += tree.evaluate(row);
  }
  return sigmoid(margin);
}

std::vector<double> predict_proba(const TreeEnsembleModel& model, const FeatureMatrix& features) {
  if (model.trees.empty()) {
    throw Error(ErrorCode::UntrainedModel, "model has no trees");
  }
  if (features.column_names() != model.feature_schema) {
    throw Error(ErrorCode::SchemaMismatch, "feature columns do not match the model schema");
  }
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out[i] = predict_row(model, features.row(i));
  }
  return out;
}

ChargingLabelSeries classify(std::span<const double> probabilities, double decision_threshold) {
  std::vector<std::uint8_t> labels(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    labels[i] = probabilities[i] > decision_threshold ? 1 : 0;
  }
  return ChargingLabelSeries(std::move(labels));
}

ChargingLabelSeries classify(const TreeEnsembleModel& model, const FeatureMatrix& features,
                             double decision_threshold) {
  return classify(predict_proba(model, features), decision_threshold);
}

void validate_model(const TreeEnsembleModel& model) {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::CorruptModel, what);
  };
  if (model.trees.empty()) {
    fail("model has no trees");
  }
  const std::size_t max_depth = model.kind == ModelKind::RandomForest
                                    ? model.params.forest.max_depth
                                    : model.params.boosting.max_depth;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& nodes = model.trees[t].nodes;
    if (nodes.empty()) {
      fail("tree " + std::to_string(t) + " is empty");
    }
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& node = nodes[i];
      if (!std::isfinite(node.value) || !std::isfinite(node.threshold)) {
        fail("non-finite value in tree " + std::to_string(t));
      }
      if (node.is_leaf()) {
        if (node.feature != -1 || node.left != -1 || node.right != -1) {
          fail("malformed leaf in tree " + std::to_string(t));
        }
        continue;
      }
      if (static_cast<std::size_t>(node.feature) >= model.feature_schema.size()) {
        fail("feature index out of range in tree " + std::to_string(t));
      }
      for (std::int32_t child : {node.left, node.right}) {
        if (child <= static_cast<std::int32_t>(i) ||
            static_cast<std::size_t>(child) >= nodes.size()) {
          fail("bad child link in tree " + std::to_string(t));
        }
        ++parents[static_cast<std::size_t>(child)];
      }
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (parents[i] != 1) {
        fail("node " + std::to_string(i) + " of tree " + std::to_string(t) +
             " does not have exactly one parent");
      }
    }
    if (model.trees[t].depth() > max_depth) {
      fail("tree " + std::to_string(t) + " exceeds max depth");
    }
  }
}

}  // namespace evdetect
