#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evdetect/model_io.hpp"
#include "evdetect/tree_model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace evdetect;

namespace {

FeatureMatrix matrix(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rows.front().size(); ++j) names.push_back("x" + std::to_string(j));
  FeatureMatrix m(FeatureMode::Offline, names);
  for (const auto& r : rows) m.append_row(r);
  return m;
}

double log_loss(const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s -= y[i] ? std::log(p[i]) : std::log1p(-p[i]);
  }
  return s / static_cast<double>(p.size());
}

struct Fixture {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
};

Fixture random_fixture(std::mt19937_64& gen, std::size_t n, std::size_t d) {
  Fixture f;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(d);
    for (auto& v : r) v = std::round(u(gen) * 100.0) / 100.0;
    const double score = r[0] - 0.5 * (d > 1 ? r[1] : 0.0) + 0.3 * (u(gen) - 0.5);
    f.rows.push_back(r);
    f.labels.push_back(score > 0.25 ? 1 : 0);
  }
  f.labels[0] = 1;
  f.labels[1] = 0;
  return f;
}

TrainParams small_forest(std::size_t trees = 10) {
  TrainParams p;
  p.forest.n_trees = trees;
  p.forest.min_samples_leaf = 1;
  return p;
}

}  // namespace

TEST(RandomForest, XorIsLearnedExactly) {
  const auto X = matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const ChargingLabelSeries y({0, 1, 1, 0});
  for (std::size_t trees : {1u, 5u}) {
    TrainParams p = small_forest(trees);
    p.forest.max_depth = 2;
    p.forest.features_per_split = 2;
    p.forest.bootstrap = false;
    const auto model = train_random_forest(X, y, p).model;
    EXPECT_EQ(classify(model, X), y);
  }
}

TEST(RandomForest, AllNegativeLabels) {
  std::mt19937_64 gen(1);
  auto f = random_fixture(gen, 30, 3);
  std::fill(f.labels.begin(), f.labels.end(), 0);
  const auto model = train_random_forest(matrix(f.rows), ChargingLabelSeries(f.labels),
                                         small_forest()).model;
  for (double p : predict_proba(model, matrix(f.rows))) EXPECT_LE(p, 0.5);
  EXPECT_EQ(classify(model, matrix(f.rows)).positives(), 0u);
}

TEST(RandomForest, SameSeedSameBytes) {
  std::mt19937_64 gen(2);
  const auto f = random_fixture(gen, 60, 4);
  const auto X = matrix(f.rows);
  const ChargingLabelSeries y(f.labels);
  const auto a = serialize_model(train_random_forest(X, y, small_forest()).model);
  const auto b = serialize_model(train_random_forest(X, y, small_forest()).model);
  EXPECT_EQ(a, b);
  TrainParams other = small_forest();
  other.forest.seed = 8;
  EXPECT_NE(serialize_model(train_random_forest(X, y, other).model), a);
}

TEST(RandomForest, RespectsDepthAndLeafSize) {
  std::mt19937_64 gen(3);
  const auto f = random_fixture(gen, 200, 3);
  TrainParams p = small_forest(3);
  p.forest.max_depth = 3;
  const auto model = train_random_forest(matrix(f.rows), ChargingLabelSeries(f.labels), p).model;
  for (const auto& tree : model.trees) EXPECT_LE(tree.depth(), 3u);
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        EXPECT_GE(node.value, 0.0);
        EXPECT_LE(node.value, 1.0);
      }
    }
  }
}

TEST(Gbdt, LinearlySeparable) {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 20; ++i) {
    // oblique boundary a + b/2 = 0, each class pushed 1.5 away from it
    const double a = i * 0.37 - 3.0;
    const double b = std::sin(i * 1.7) * 2.0;
    const bool positive = a + 0.5 * b > 0.0;
    const double push = positive ? 1.5 : -1.5;
    rows.push_back({a + push, b + push});
    y.push_back(positive ? 1 : 0);
  }
  TrainParams p;
  p.boosting.n_rounds = 50;
  const auto X = matrix(rows);
  const auto result = train_gbdt(X, ChargingLabelSeries(y), p);
  EXPECT_EQ(classify(result.model, X), ChargingLabelSeries(y));
  ASSERT_EQ(result.loss_per_round.size(), 51u);
  EXPECT_LT(result.loss_per_round.back(), result.loss_per_round.front());
  EXPECT_NEAR(result.loss_per_round.back(), log_loss(predict_proba(result.model, X), y), 1e-12);
}

TEST(Gbdt, AllPositiveLabels) {
  std::mt19937_64 gen(4);
  auto f = random_fixture(gen, 30, 2);
  std::fill(f.labels.begin(), f.labels.end(), 1);
  const auto model = train_gbdt(matrix(f.rows), ChargingLabelSeries(f.labels), TrainParams{}).model;
  EXPECT_GE(model.base_score, 10.0 - 1e-12);
  for (double p : predict_proba(model, matrix(f.rows))) EXPECT_GE(p, 0.5);
}

TEST(Gbdt, HugeRegularizationKeepsPrior) {
  std::mt19937_64 gen(5);
  const auto f = random_fixture(gen, 50, 3);
  TrainParams p;
  p.boosting.n_rounds = 20;
  p.boosting.l2_leaf_regularization = 1e12;
  const auto model = train_gbdt(matrix(f.rows), ChargingLabelSeries(f.labels), p).model;
  const double prior = 1.0 / (1.0 + std::exp(-model.base_score));
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        EXPECT_LT(std::abs(node.value), 1e-9);
      }
    }
  }
  for (double q : predict_proba(model, matrix(f.rows))) EXPECT_NEAR(q, prior, 1e-8);
}

TEST(Gbdt, LossNeverIncreases) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 25; ++trial) {
    const auto f = random_fixture(gen, 20 + gen() % 200, 1 + gen() % 4);
    TrainParams p;
    p.boosting.n_rounds = 30;
    p.boosting.max_depth = 1 + gen() % 6;
    p.boosting.learning_rate = 0.01 + 0.09 * static_cast<double>(gen() % 100) / 99.0;
    p.boosting.l2_leaf_regularization = static_cast<double>(gen() % 4);
    p.boosting.min_child_weight = static_cast<double>(gen() % 3) * 0.5;
    p.boosting.positive_class_weight = 1.0 + static_cast<double>(gen() % 3);
    const auto r = train_gbdt(matrix(f.rows), ChargingLabelSeries(f.labels), p);
    for (std::size_t k = 1; k < r.loss_per_round.size(); ++k) {
      ASSERT_LE(r.loss_per_round[k], r.loss_per_round[k - 1] + 1e-15) << "trial " << trial;
    }
  }
}

// One depth-1 round must pick the split an exhaustive search picks.
TEST(Gbdt, DepthOneMatchesExhaustiveSearch) {
  std::mt19937_64 gen(7);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + gen() % 7;
    const std::size_t d = 1 + gen() % 3;
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = static_cast<double>(gen() % 5);
      y[i] = gen() % 2;
    }
    TrainParams p;
    p.boosting.n_rounds = 1;
    p.boosting.max_depth = 1;
    p.boosting.learning_rate = 0.1;
    p.boosting.l2_leaf_regularization = static_cast<double>(gen() % 3) * 0.5;
    p.boosting.min_child_weight = (gen() % 2) ? 0.0 : 0.3;
    const ChargingLabelSeries labels(y);
    const auto model = train_gbdt(matrix(rows), labels, p).model;

    const double pos = static_cast<double>(labels.positives());
    const double rate = pos / static_cast<double>(n);
    const double base = rate <= 0 ? -10.0 : rate >= 1 ? 10.0 : std::log(rate / (1 - rate));
    const double prob = 1.0 / (1.0 + std::exp(-base));
    std::vector<double> g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = prob - y[i];
      h[i] = prob * (1 - prob);
    }
    const auto candidates = oracle::newton_candidates(
        rows, g, h, p.boosting.l2_leaf_regularization, p.boosting.min_child_weight);
    oracle::Split best;
    for (const auto& c : candidates) {
      if (c.gain > best.gain) best = c;
    }
    // fixtures where another cut comes within rounding of the winner are
    // excluded; tie-breaking has its own test
    bool near_tie = false;
    for (const auto& c : candidates) {
      const bool same = c.feature == best.feature && c.threshold == best.threshold;
      if (!same && std::abs(c.gain - best.gain) < 1e-9) near_tie = true;
    }
    if (best.feature >= 0 && best.gain < 1e-9) near_tie = true;
    if (near_tie) continue;
    ++checked;
    const TreeNode& root = model.trees.at(0).nodes.at(0);
    if (best.feature < 0) {
      EXPECT_TRUE(root.is_leaf()) << "trial " << trial;
    } else {
      ASSERT_FALSE(root.is_leaf()) << "trial " << trial;
      EXPECT_EQ(root.feature, best.feature) << "trial " << trial;
      EXPECT_EQ(root.threshold, best.threshold) << "trial " << trial;
    }
  }
  EXPECT_GT(checked, 200);
}

TEST(Gbdt, TiesPreferLowestFeatureThenThreshold) {
  // identical columns give identical gains; the symmetric labels make the
  // two cuts on each column tie as well
  const auto X = matrix({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  const ChargingLabelSeries y({0, 1, 1, 0});
  TrainParams p;
  p.boosting.n_rounds = 1;
  p.boosting.max_depth = 1;
  p.boosting.min_child_weight = 0.0;
  p.boosting.l2_leaf_regularization = 0.0;
  const auto root = train_gbdt(X, y, p).model.trees[0].nodes[0];
  ASSERT_FALSE(root.is_leaf());
  EXPECT_EQ(root.feature, 0);
  EXPECT_EQ(root.threshold, 0.5);
}

TEST(TreeModels, MonotoneTransformInvariance) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_fixture(gen, 80, 3);
    auto warped = f.rows;
    const std::size_t j = gen() % 3;
    for (auto& r : warped) r[j] = std::exp(3.0 * r[j]) + 10.0;
    // every row must be a training row: an out-of-bag row can fall between
    // two training values, where a nonlinear warp moves the midpoint
    TrainParams p = small_forest(5);
    p.forest.bootstrap = false;
    p.boosting.n_rounds = 10;
    for (ModelKind kind : {ModelKind::RandomForest, ModelKind::GradientBoosted}) {
      const auto a = train_model(kind, matrix(f.rows), ChargingLabelSeries(f.labels), p).model;
      const auto b = train_model(kind, matrix(warped), ChargingLabelSeries(f.labels), p).model;
      EXPECT_EQ(predict_proba(a, matrix(f.rows)), predict_proba(b, matrix(warped)));
    }
  }
}

TEST(TreeModels, ProbabilitiesAreBounded) {
  std::mt19937_64 gen(9);
  const auto f = random_fixture(gen, 100, 3);
  TrainParams p = small_forest(5);
  p.boosting.n_rounds = 40;
  p.boosting.learning_rate = 1.0;
  p.boosting.l2_leaf_regularization = 0.0;
  p.boosting.min_child_weight = 0.0;
  for (ModelKind kind : {ModelKind::RandomForest, ModelKind::GradientBoosted}) {
    const auto m = train_model(kind, matrix(f.rows), ChargingLabelSeries(f.labels), p).model;
    std::uniform_real_distribution<double> u(-1e300, 1e300);
    for (int i = 0; i < 1000; ++i) {
      const std::vector<double> row{u(gen), u(gen), i % 2 ? 0.5 : u(gen)};
      const double q = predict_row(m, row);
      ASSERT_TRUE(std::isfinite(q));
      ASSERT_GE(q, 0.0);
      ASSERT_LE(q, 1.0);
    }
  }
}

TEST(TreeModels, Guards) {
  const auto X = matrix({{0.0}, {1.0}, {2.0}});
  EXPECT_ERROR_CODE(train_gbdt(X, ChargingLabelSeries({0, 1}), TrainParams{}),
                    ErrorCode::ShapeMismatch);
  TrainParams bad;
  bad.boosting.learning_rate = 0.0;
  EXPECT_ERROR_CODE(train_gbdt(X, ChargingLabelSeries({0, 1, 0}), bad), ErrorCode::InvalidParams);
  bad = {};
  bad.forest.n_trees = 0;
  EXPECT_ERROR_CODE(train_random_forest(X, ChargingLabelSeries({0, 1, 0}), bad),
                    ErrorCode::InvalidParams);
  TreeEnsembleModel empty;
  empty.kind = ModelKind::RandomForest;
  empty.feature_schema = X.column_names();
  EXPECT_ERROR_CODE(predict_proba(empty, X), ErrorCode::UntrainedModel);
  EXPECT_ERROR_CODE(predict_row(empty, X.row(0)), ErrorCode::UntrainedModel);
  const auto model = train_gbdt(X, ChargingLabelSeries({0, 1, 0}), TrainParams{}).model;
  EXPECT_ERROR_CODE(predict_proba(model, matrix({{1.0, 2.0}})), ErrorCode::SchemaMismatch);
  EXPECT_ERROR_CODE(parse_model_kind("svm"), ErrorCode::InvalidConfig);
  EXPECT_EQ(parse_model_kind("xgboost"), ModelKind::GradientBoosted);
  EXPECT_EQ(parse_model_kind("random_forest"), ModelKind::RandomForest);
}

TEST(TreeModels, DegenerateDataIsFlagged) {
  const auto X = matrix({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
  const auto r = train_gbdt(X, ChargingLabelSeries({0, 1, 1}), TrainParams{});
  EXPECT_TRUE(r.degenerate_data);
  for (const auto& t : r.model.trees) EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_FALSE(train_gbdt(matrix({{1.0}, {2.0}}), ChargingLabelSeries({0, 1}), TrainParams{})
                   .degenerate_data);
}

TEST(Predict, SingleZeroLeafIsOneHalf) {
  TreeEnsembleModel m;
  m.kind = ModelKind::GradientBoosted;
  m.base_score = 0.0;
  m.feature_schema = {"x0"};
  m.trees.push_back(DecisionTree{{TreeNode{}}});
  EXPECT_EQ(predict_row(m, std::vector<double>{3.0}), 0.5);
}

TEST(Classify, StrictThreshold) {
  const std::vector<double> p{0.2, 0.7, 0.5};
  EXPECT_EQ(classify(p, 0.5), ChargingLabelSeries({0, 1, 0}));
  EXPECT_EQ(classify(std::vector<double>{0.0, 0.1, 1.0}, 0.0), ChargingLabelSeries({0, 1, 1}));
  EXPECT_EQ(classify(std::vector<double>{0.0, 0.9, 1.0}, 1.0), ChargingLabelSeries({0, 0, 0}));
}
