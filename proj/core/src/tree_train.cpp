// Exact greedy tree growing shared by the random forest and the boosted
// ensemble. Every feature keeps its own row list sorted by value; a node owns
// the same [begin, end) slice in every list, and splitting stably partitions
// each slice, so no node ever re-sorts.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evdetect/random.hpp"
#include "evdetect/tree_model.hpp"

namespace evdetect {

namespace {

struct SortedEntry {
  double value;
  std::uint32_t row;
};

using SortedLists = std::vector<std::vector<SortedEntry>>;

SortedLists presort(const FeatureMatrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  SortedLists lists(d, std::vector<SortedEntry>(n));
  for (std::size_t f = 0; f < d; ++f) {
    auto& list = lists[f];
    for (std::size_t i = 0; i < n; ++i) {
      list[i] = {features.at(i, f), static_cast<std::uint32_t>(i)};
    }
    std::sort(list.begin(), list.end(), [](const SortedEntry& a, const SortedEntry& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
  }
  return lists;
}

/// Midpoint of two consecutive distinct values, kept inside [lo, hi).
double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= lo && mid < hi) ? mid : lo;
}

void check_shape(const FeatureMatrix& features, const ChargingLabelSeries& labels) {
  if (features.rows() != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels differ in length");
  }
  if (features.rows() < 2) {
    throw Error(ErrorCode::ShapeMismatch, "need at least two training rows");
  }
  if (features.cols() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "feature matrix has no columns");
  }
}

bool rows_identical_with_mixed_labels(const FeatureMatrix& features,
                                      const ChargingLabelSeries& labels) {
  const std::size_t positives = labels.positives();
  if (positives == 0 || positives == labels.size()) {
    return false;
  }
  const auto first = features.row(0);
  for (std::size_t i = 1; i < features.rows(); ++i) {
    if (!std::equal(first.begin(), first.end(), features.row(i).begin())) {
      return false;
    }
  }
  return true;
}

/// Grows one tree. `Criterion` supplies the node statistics and the split
/// objective:
///   Stats; Stats add(Stats, row); Stats minus(Stats, Stats);
///   bool splittable(Stats); bool valid(Stats left, Stats right);
///   double gain(Stats left, Stats right, Stats parent); double min_gain();
///   double leaf_value(Stats); candidate_features(std::vector<std::size_t>&)
template <typename Criterion>
class TreeGrower {
 public:
  using Stats = typename Criterion::Stats;

  TreeGrower(Criterion& criterion, SortedLists& lists, std::size_t max_depth,
             std::size_t total_rows)
      : criterion_(criterion),
        lists_(lists),
        max_depth_(max_depth),
        goes_left_(total_rows, 0),
        scratch_(lists.empty() ? 0 : lists.front().size()) {}

  /// `on_leaf(begin, end, value)` sees each leaf's slice of lists[0].
  template <typename OnLeaf>
  DecisionTree grow(OnLeaf&& on_leaf) {
    DecisionTree tree;
    const std::size_t n = lists_.front().size();
    Stats root{};
    for (std::size_t p = 0; p < n; ++p) {
      root = criterion_.add(root, lists_.front()[p].row);
    }
    grow_node(tree, 0, n, 0, root, on_leaf);
    return tree;
  }

 private:
  struct Candidate {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;
    Stats left{};
  };

  template <typename OnLeaf>
  std::int32_t grow_node(DecisionTree& tree, std::size_t begin, std::size_t end,
                         std::size_t depth, const Stats& stats, OnLeaf& on_leaf) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();

    Candidate best;
    best.gain = criterion_.min_gain();
    if (depth < max_depth_ && end - begin >= 2 && criterion_.splittable(stats)) {
      criterion_.candidate_features(features_);
      for (std::size_t f : features_) {
        scan_feature(f, begin, end, stats, best);
      }
    }

    if (best.feature < 0) {
      const double value = criterion_.leaf_value(stats);
      tree.nodes[static_cast<std::size_t>(index)].value = value;
      on_leaf(begin, end, value);
      return index;
    }

    partition(static_cast<std::size_t>(best.feature), begin, end, best.left_count);
    const std::size_t mid = begin + best.left_count;
    const Stats right = criterion_.minus(stats, best.left);
    const std::int32_t left_child = grow_node(tree, begin, mid, depth + 1, best.left, on_leaf);
    const std::int32_t right_child = grow_node(tree, mid, end, depth + 1, right, on_leaf);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_child;
    node.right = right_child;
    return index;
  }

  // Ascending scan; strict improvement keeps the lowest threshold on ties,
  // and features arrive in ascending order so the lowest index wins.
  void scan_feature(std::size_t f, std::size_t begin, std::size_t end, const Stats& parent,
                    Candidate& best) {
    const auto& list = lists_[f];
    Stats left{};
    for (std::size_t p = begin; p + 1 < end; ++p) {
      left = criterion_.add(left, list[p].row);
      if (!(list[p].value < list[p + 1].value)) {
        continue;
      }
      const Stats right = criterion_.minus(parent, left);
      if (!criterion_.valid(left, right)) {
        continue;
      }
      const double gain = criterion_.gain(left, right, parent);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = static_cast<std::int32_t>(f);
        best.threshold = split_threshold(list[p].value, list[p + 1].value);
        best.left_count = p - begin + 1;
        best.left = left;
      }
    }
  }

  void partition(std::size_t split_feature, std::size_t begin, std::size_t end,
                 std::size_t left_count) {
    const auto& split_list = lists_[split_feature];
    for (std::size_t p = begin; p < end; ++p) {
      goes_left_[split_list[p].row] = p < begin + left_count ? 1 : 0;
    }
    for (std::size_t f = 0; f < lists_.size(); ++f) {
      if (f == split_feature) {
        continue;
      }
      auto& list = lists_[f];
      std::size_t write = begin;
      std::size_t spill = 0;
      for (std::size_t p = begin; p < end; ++p) {
        if (goes_left_[list[p].row]) {
          list[write++] = list[p];
        } else {
          scratch_[spill++] = list[p];
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
                list.begin() + static_cast<std::ptrdiff_t>(write));
    }
  }

  Criterion& criterion_;
  SortedLists& lists_;
  std::size_t max_depth_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<SortedEntry> scratch_;
  std::vector<std::size_t> features_;
};

// Weighted Gini criterion; weights are bootstrap multiplicities.
class GiniCriterion {
 public:
  struct Stats {
    double weight = 0.0;
    double positive = 0.0;
  };

  GiniCriterion(const std::vector<double>& weights, std::span<const std::uint8_t> labels,
                std::size_t min_samples_leaf, std::size_t feature_count,
                std::size_t features_per_split, Rng& rng)
      : weights_(weights),
        labels_(labels),
        min_leaf_(static_cast<double>(min_samples_leaf)),
        feature_count_(feature_count),
        per_split_(features_per_split),
        rng_(rng),
        pool_(feature_count) {}

  Stats add(Stats s, std::uint32_t row) const {
    s.weight += weights_[row];
    s.positive += weights_[row] * labels_[row];
    return s;
  }
  static Stats minus(Stats a, Stats b) { return {a.weight - b.weight, a.positive - b.positive}; }
  static bool splittable(Stats s) { return s.positive > 0.0 && s.positive < s.weight; }
  bool valid(Stats l, Stats r) const { return l.weight >= min_leaf_ && r.weight >= min_leaf_; }
  static double min_gain() { return -std::numeric_limits<double>::infinity(); }
  /// Decrease in weighted Gini impurity (sum over classes of c^2 / w).
  static double gain(Stats l, Stats r, Stats parent) {
    return purity(l) + purity(r) - purity(parent);
  }
  static double leaf_value(Stats s) { return s.weight > 0.0 ? s.positive / s.weight : 0.0; }

  void candidate_features(std::vector<std::size_t>& out) {
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    for (std::size_t i = 0; i < per_split_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(feature_count_ - i));
      std::swap(pool_[i], pool_[j]);
    }
    out.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(per_split_));
    std::sort(out.begin(), out.end());
  }

 private:
  static double purity(Stats s) {
    const double negative = s.weight - s.positive;
    return (s.positive * s.positive + negative * negative) / s.weight;
  }

  const std::vector<double>& weights_;
  std::span<const std::uint8_t> labels_;
  double min_leaf_;
  std::size_t feature_count_;
  std::size_t per_split_;
  Rng& rng_;
  std::vector<std::size_t> pool_;
};

// Second-order logistic criterion.
class NewtonCriterion {
 public:
  struct Stats {
    double grad = 0.0;
    double hess = 0.0;
  };

  NewtonCriterion(const std::vector<double>& grad, const std::vector<double>& hess,
                  const GbdtParams& params, std::size_t feature_count)
      : grad_(grad), hess_(hess), params_(params), feature_count_(feature_count) {}

  Stats add(Stats s, std::uint32_t row) const {
    s.grad += grad_[row];
    s.hess += hess_[row];
    return s;
  }
  static Stats minus(Stats a, Stats b) { return {a.grad - b.grad, a.hess - b.hess}; }
  static bool splittable(Stats) { return true; }
  bool valid(Stats l, Stats r) const {
    const double lambda = params_.l2_leaf_regularization;
    return l.hess >= params_.min_child_weight && r.hess >= params_.min_child_weight &&
           l.hess + lambda > 0.0 && r.hess + lambda > 0.0;
  }
  static double min_gain() { return 0.0; }
  double gain(Stats l, Stats r, Stats parent) const {
    return 0.5 * (score(l) + score(r) - score(parent));
  }
  double leaf_value(Stats s) const {
    const double denom = s.hess + params_.l2_leaf_regularization;
    return denom > 0.0 ? -s.grad / denom * params_.learning_rate : 0.0;
  }
  void candidate_features(std::vector<std::size_t>& out) const {
    out.resize(feature_count_);
    std::iota(out.begin(), out.end(), std::size_t{0});
  }

 private:
  double score(Stats s) const {
    const double denom = s.hess + params_.l2_leaf_regularization;
    return denom > 0.0 ? s.grad * s.grad / denom : 0.0;
  }

  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  const GbdtParams& params_;
  std::size_t feature_count_;
};

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double margin) {
  if (margin >= 0.0) {
    return 1.0 / (1.0 + std::exp(-margin));
  }
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

}  // namespace

TrainResult train_random_forest(const FeatureMatrix& features, const ChargingLabelSeries& labels,
                                const TrainParams& params) {
  params.validate();
  check_shape(features, labels);
  const auto& p = params.forest;
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const std::size_t per_split =
      p.features_per_split == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
          : std::min(p.features_per_split, d);

  TrainResult result;
  result.degenerate_data = rows_identical_with_mixed_labels(features, labels);
  result.model.kind = ModelKind::RandomForest;
  result.model.feature_schema = features.column_names();
  result.model.params = params;

  const SortedLists presorted = presort(features);
  std::vector<double> weights(n);
  for (std::size_t t = 0; t < p.n_trees; ++t) {
    Rng rng(mix_seed(p.seed, t, 0x5eed));
    std::fill(weights.begin(), weights.end(), p.bootstrap ? 0.0 : 1.0);
    if (p.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        weights[rng.below(n)] += 1.0;
      }
    }
    SortedLists lists(d);
    for (std::size_t f = 0; f < d; ++f) {
      lists[f].reserve(n);
      for (const auto& e : presorted[f]) {
        if (weights[e.row] > 0.0) {
          lists[f].push_back(e);
        }
      }
    }
    GiniCriterion criterion(weights, labels.labels(), p.min_samples_leaf, d, per_split, rng);
    TreeGrower<GiniCriterion> grower(criterion, lists, p.max_depth, n);
    result.model.trees.push_back(grower.grow([](std::size_t, std::size_t, double) {}));
  }
  return result;
}

TrainResult train_gbdt(const FeatureMatrix& features, const ChargingLabelSeries& labels,
                       const TrainParams& params) {
  params.validate();
  check_shape(features, labels);
  const auto& p = params.boosting;
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const auto y = labels.labels();

  TrainResult result;
  result.degenerate_data = rows_identical_with_mixed_labels(features, labels);
  auto& model = result.model;
  model.kind = ModelKind::GradientBoosted;
  model.feature_schema = features.column_names();
  model.params = params;

  const double rate = static_cast<double>(labels.positives()) / static_cast<double>(n);
  model.base_score = rate <= 0.0   ? -10.0
                     : rate >= 1.0 ? 10.0
                                   : std::clamp(std::log(rate / (1.0 - rate)), -10.0, 10.0);

  std::vector<double> sample_weight(n);
  double weight_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sample_weight[i] = y[i] ? p.positive_class_weight : 1.0;
    weight_total += sample_weight[i];
  }
  std::vector<double> margin(n, model.base_score);
  const auto mean_loss = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loss += sample_weight[i] * (softplus(margin[i]) - y[i] * margin[i]);
    }
    return loss / weight_total;
  };
  result.loss_per_round.push_back(mean_loss());

  const SortedLists presorted = presort(features);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  NewtonCriterion criterion(grad, hess, p, d);
  for (std::size_t round = 0; round < p.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(margin[i]);
      grad[i] = sample_weight[i] * (prob - y[i]);
      hess[i] = sample_weight[i] * prob * (1.0 - prob);
    }
    SortedLists lists = presorted;
    TreeGrower<NewtonCriterion> grower(criterion, lists, p.max_depth, n);
    const auto& rows = lists.front();
    model.trees.push_back(grower.grow([&](std::size_t begin, std::size_t end, double value) {
      for (std::size_t q = begin; q < end; ++q) {
        margin[rows[q].row] += value;
      }
    }));
    result.loss_per_round.push_back(mean_loss());
  }
  return result;
}

}  // namespace evdetect
