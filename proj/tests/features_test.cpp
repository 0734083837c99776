#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evdetect/csv_io.hpp"
#include "evdetect/features.hpp"
#include "evdetect/rolling.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace evdetect;

namespace {

LoadSeries make_series(std::vector<double> v) {
  return {parse_timestamp("2018-01-01T00:00:00Z"), kMinuteInterval, std::move(v)};
}

// Columns holding mean/std/var use a relative tolerance; everything else
// (min, max, median, peaks) must match exactly.
bool is_moment_column(const std::string& name) {
  return name.ends_with("_mean") || name.ends_with("_std") || name.ends_with("_var");
}

void expect_rows_match(const std::vector<std::string>& names, std::span<const double> got,
                       std::span<const double> want, std::size_t t) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t j = 0; j < got.size(); ++j) {
    if (is_moment_column(names[j])) {
      EXPECT_LE(std::abs(got[j] - want[j]), 1e-9 * std::abs(want[j]) + 1e-12)
          << names[j] << " at t=" << t;
    } else {
      EXPECT_EQ(got[j], want[j]) << names[j] << " at t=" << t;
    }
  }
}

}  // namespace

TEST(FeatureConfig, Schema) {
  const auto off = FeatureConfig::offline(360).column_names();
  ASSERT_EQ(off.size(), 21u);
  EXPECT_EQ(off.front(), "c360_mean");
  EXPECT_EQ(off[6], "c360_peaks");
  EXPECT_EQ(off[7], "f360_mean");
  EXPECT_EQ(off.back(), "b360_peaks");
  const auto on = FeatureConfig::online(360, 90).column_names();
  ASSERT_EQ(on.size(), 13u);
  EXPECT_EQ(on[0], "b360_mean");
  EXPECT_EQ(on[5], "b360_median");
  EXPECT_EQ(on[6], "b90_mean");
  EXPECT_EQ(on[12], "b360_peaks");
  EXPECT_EQ(config_from_schema(on), FeatureConfig::online(360, 90));
  EXPECT_EQ(config_from_schema(off), FeatureConfig::offline(360));
  EXPECT_ERROR_CODE(config_from_schema(std::vector<std::string>{"x"}), ErrorCode::SchemaMismatch);
}

TEST(FeatureConfig, Validation) {
  EXPECT_ERROR_CODE(FeatureConfig::online(60, 60).validate(), ErrorCode::InvalidConfig);
  EXPECT_ERROR_CODE(FeatureConfig::online(60, 0).validate(), ErrorCode::InvalidConfig);
  EXPECT_ERROR_CODE(parse_feature_mode("sideways"), ErrorCode::InvalidConfig);
  FeatureConfig c = FeatureConfig::offline(0);
  EXPECT_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);
}

TEST(OfflineFeatures, ConstantSeries) {
  const LoadSeries s = make_series(std::vector<double>(2000, 2.0));
  const auto row = extract_offline_features(s, 1000, FeatureConfig::offline());
  ASSERT_EQ(row.size(), 21u);
  for (std::size_t block = 0; block < 3; ++block) {
    const double* b = row.data() + 7 * block;
    EXPECT_EQ(b[0], 2.0);  // mean
    EXPECT_EQ(b[1], 0.0);  // std
    EXPECT_EQ(b[2], 0.0);  // var
    EXPECT_EQ(b[3], 2.0);
    EXPECT_EQ(b[4], 2.0);
    EXPECT_EQ(b[5], 2.0);
    EXPECT_EQ(b[6], 0.0);
  }
}

TEST(OfflineFeatures, FirstStepBackwardIsSingleton) {
  std::mt19937_64 gen(1);
  const auto x = testutil::random_load(gen, 10000);
  const auto row = extract_offline_features(make_series(x), 0, FeatureConfig::offline());
  const double* b = row.data() + 14;
  EXPECT_EQ(b[0], x[0]);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(b[2], 0.0);
  EXPECT_EQ(b[3], x[0]);
  EXPECT_EQ(b[4], x[0]);
  EXPECT_EQ(b[5], x[0]);
  EXPECT_EQ(b[6], 0.0);
}

TEST(OfflineFeatures, DependsOnlyOnWindowSpan) {
  std::mt19937_64 gen(2);
  auto x = testutil::random_load(gen, 3000);
  const FeatureConfig cfg = FeatureConfig::offline(100);
  const std::size_t t = 1500;
  const auto before = extract_offline_features(make_series(x), t, cfg);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i + 100 < t || i > t + 100) x[i] = 50.0 + static_cast<double>(i % 7);
  }
  EXPECT_EQ(extract_offline_features(make_series(x), t, cfg), before);
}

TEST(OfflineFeatures, MatchesOracle) {
  std::mt19937_64 gen(3);
  const auto x = testutil::random_load(gen, 1200);
  const FeatureConfig cfg = FeatureConfig::offline(61);
  const LoadSeries s = make_series(x);
  for (int k = 0; k < 100; ++k) {
    const std::size_t t = gen() % x.size();
    const auto row = extract_offline_features(s, t, cfg);
    const std::size_t half = 31;
    const std::size_t n = x.size() - 1;
    const std::pair<std::size_t, std::size_t> ranges[] = {
        {t >= half ? t - half : 0, std::min(n, t + half)},
        {t, std::min(n, t + 61)},
        {t >= 61 ? t - 61 : 0, t}};
    for (std::size_t b = 0; b < 3; ++b) {
      const auto w = oracle::slice(x, ranges[b].first, ranges[b].second);
      const auto o = oracle::stats(w);
      const double* r = row.data() + 7 * b;
      EXPECT_NEAR(r[0], o.mean, 1e-12 * (1 + o.mean));
      EXPECT_NEAR(r[2], o.variance, 1e-9 * o.variance + 1e-14);
      EXPECT_EQ(r[3], o.minimum);
      EXPECT_EQ(r[4], o.maximum);
      EXPECT_EQ(r[5], o.median);
      EXPECT_EQ(r[6], static_cast<double>(oracle::peaks(w, 1.0)));
    }
  }
}

TEST(OnlineFeatures, ConstantSeries) {
  const LoadSeries s = make_series(std::vector<double>(1000, 3.0));
  const auto row = extract_online_features(s, 500, FeatureConfig::online());
  ASSERT_EQ(row.size(), 13u);
  EXPECT_EQ(row[0], 3.0);
  EXPECT_EQ(row[2], 0.0);
  EXPECT_EQ(row[6], 3.0);
  EXPECT_EQ(row[8], 0.0);
  EXPECT_EQ(row[12], 0.0);
}

TEST(OnlineFeatures, Causality) {
  std::mt19937_64 gen(4);
  auto x = testutil::random_load(gen, 2000);
  const FeatureConfig cfg = FeatureConfig::online(360, 90);
  for (std::size_t t : {0u, 1u, 89u, 360u, 1000u, 1998u}) {
    const auto before = extract_online_features(make_series(x), t, cfg);
    auto y = x;
    for (std::size_t i = t + 1; i < y.size(); ++i) y[i] = 17.0 * static_cast<double>(gen() % 3);
    EXPECT_EQ(extract_online_features(make_series(y), t, cfg), before);
  }
}

TEST(Featurize, Shapes) {
  std::mt19937_64 gen(5);
  const LoadSeries s = make_series(testutil::random_load(gen, 1440));
  const FeatureMatrix off = featurize_series(s, FeatureConfig::offline());
  EXPECT_EQ(off.rows(), 1440u);
  EXPECT_EQ(off.cols(), 21u);
  const FeatureMatrix on = featurize_series(s, FeatureConfig::online());
  EXPECT_EQ(on.rows(), 1440u);
  EXPECT_EQ(on.cols(), 13u);
  for (std::size_t i = 0; i < on.rows(); ++i) {
    for (double v : on.row(i)) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Featurize, OnlineRowsMatchPerStepExtraction) {
  std::mt19937_64 gen(6);
  const LoadSeries s = make_series(testutil::random_load(gen, 5000));
  const FeatureConfig cfg = FeatureConfig::online();
  const FeatureMatrix m = featurize_series(s, cfg);
  for (int k = 0; k < 100; ++k) {
    const std::size_t t = gen() % s.size();
    expect_rows_match(m.column_names(), m.row(t), extract_online_features(s, t, cfg), t);
  }
}

TEST(Featurize, OfflineEveryRowMatchesPerStepExtraction) {
  std::mt19937_64 gen(7);
  const LoadSeries s = make_series(testutil::random_load(gen, 1500));
  FeatureConfig cfg = FeatureConfig::offline(45);
  cfg.centered_offset = -5;
  const FeatureMatrix m = featurize_series(s, cfg);
  for (std::size_t t = 0; t < s.size(); ++t) {
    expect_rows_match(m.column_names(), m.row(t), extract_offline_features(s, t, cfg), t);
  }
}

TEST(Streaming, ConstantPushes) {
  StreamingOnlineExtractor ex(FeatureConfig::online());
  std::vector<double> last;
  for (int i = 0; i < 400; ++i) last = ex.push(2.0);
  const LoadSeries s = make_series(std::vector<double>(400, 2.0));
  EXPECT_EQ(last, extract_online_features(s, 399, FeatureConfig::online()));
}

TEST(Streaming, FirstPushIsSingleton) {
  StreamingOnlineExtractor ex(FeatureConfig::online());
  const auto row = ex.push(4.25);
  EXPECT_EQ(row[0], 4.25);
  EXPECT_EQ(row[1], 0.0);
  EXPECT_EQ(row[2], 0.0);
  EXPECT_EQ(row[3], 4.25);
  EXPECT_EQ(row[4], 4.25);
  EXPECT_EQ(row[5], 4.25);
  EXPECT_EQ(row[12], 0.0);
}

TEST(Streaming, MatchesBatchOnRandomSeries) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 3; ++trial) {
    const LoadSeries s = make_series(testutil::random_load(gen, 10000));
    const FeatureConfig cfg = FeatureConfig::online(360, 90);
    const FeatureMatrix batch = featurize_series(s, cfg);
    StreamingOnlineExtractor ex(cfg);
    std::vector<double> row(13);
    for (std::size_t t = 0; t < s.size(); ++t) {
      ex.push(s[t], row);
      // the rolling featurizer and the streaming extractor share an update order
      const auto want = batch.row(t);
      ASSERT_TRUE(std::equal(row.begin(), row.end(), want.begin())) << "t=" << t;
    }
    for (int k = 0; k < 50; ++k) {
      const std::size_t t = gen() % s.size();
      StreamingOnlineExtractor fresh(cfg);
      std::vector<double> r;
      for (std::size_t i = 0; i <= t; ++i) r = fresh.push(s[i]);
      expect_rows_match(batch.column_names(), r, extract_online_features(s, t, cfg), t);
    }
  }
}

TEST(Streaming, RejectsBadSamples) {
  StreamingOnlineExtractor ex(FeatureConfig::online());
  EXPECT_ERROR_CODE(ex.push(-1.0), ErrorCode::InvalidSample);
  EXPECT_ERROR_CODE(ex.push(std::nan("")), ErrorCode::InvalidSample);
  EXPECT_ERROR_CODE(StreamingOnlineExtractor(FeatureConfig::offline()), ErrorCode::InvalidConfig);
}

TEST(RollingAccumulator, SlidingMatchesOracle) {
  std::mt19937_64 gen(9);
  const auto x = testutil::random_load(gen, 4000);
  RollingAccumulator acc(PeakThreshold(1.0), 64);
  const std::size_t n = 120;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (t > n) acc.pop_front(x[t - n - 1], x[t - n]);
    acc.push_back(x[t]);
    const auto w = oracle::slice(x, t > n ? t - n : 0, t);
    const auto o = oracle::stats(w);
    const WindowStats s = acc.stats();
    ASSERT_EQ(s.minimum, o.minimum);
    ASSERT_EQ(s.maximum, o.maximum);
    ASSERT_EQ(s.median, o.median);
    ASSERT_NEAR(s.mean, o.mean, 1e-9 * o.mean + 1e-12);
    ASSERT_NEAR(s.variance, o.variance, 1e-9 * o.variance + 1e-12);
    ASSERT_EQ(acc.peaks(), oracle::peaks(w, 1.0));
  }
}

TEST(RollingAccumulator, QuietWindowAfterLevelDrop) {
  // a high, noisy stretch followed by a low, nearly flat one: the variance of
  // the quiet window must not inherit cancellation error from the old level
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  for (int i = 0; i < 300; ++i) x.push_back(9.0 + u(gen));
  for (int i = 0; i < 400; ++i) x.push_back(0.12 + 0.01 * u(gen));
  const std::size_t n = 90;
  RollingAccumulator acc(PeakThreshold(1.0), n + 1);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (t > n) acc.pop_front(x[t - n - 1], x[t - n]);
    acc.push_back(x[t]);
    const auto o = oracle::stats(oracle::slice(x, t > n ? t - n : 0, t));
    const WindowStats s = acc.stats();
    ASSERT_NEAR(s.mean, o.mean, 1e-9 * o.mean) << t;
    ASSERT_NEAR(s.variance, o.variance, 1e-9 * o.variance) << t;
  }
}

TEST(FeatureCsv, RoundTrip) {
  testutil::TempDir dir("features");
  std::mt19937_64 gen(10);
  const LoadSeries s = make_series(testutil::random_load(gen, 300));
  std::vector<std::uint8_t> y(300);
  for (auto& v : y) v = gen() % 2;
  const ChargingLabelSeries labels(y);
  const FeatureMatrix m = featurize_series(s, FeatureConfig::online(60, 15));
  write_feature_csv(m, s, &labels, dir / "f.csv");
  const FeatureTable t = read_feature_csv(dir / "f.csv");
  EXPECT_EQ(t.features, m);
  ASSERT_TRUE(t.labels.has_value());
  EXPECT_EQ(*t.labels, labels);
  EXPECT_EQ(t.timestamps.front(), s.start());
  write_feature_csv(m, s, nullptr, dir / "g.csv");
  EXPECT_FALSE(read_feature_csv(dir / "g.csv").labels.has_value());
}

TEST(FeatureMatrix, Guards) {
  FeatureMatrix m(FeatureMode::Online, FeatureConfig::online().column_names());
  EXPECT_ERROR_CODE(m.append_row(std::vector<double>(12, 0.0)), ErrorCode::ShapeMismatch);
  std::vector<double> bad(13, 0.0);
  bad[3] = std::nan("");
  EXPECT_ERROR_CODE(m.append_row(bad), ErrorCode::InvalidSample);
  FeatureMatrix other(FeatureMode::Online, FeatureConfig::online(100, 20).column_names());
  EXPECT_ERROR_CODE(m.append_rows(other), ErrorCode::SchemaMismatch);
}
