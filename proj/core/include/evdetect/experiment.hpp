#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evdetect/features.hpp"
#include "evdetect/metrics.hpp"
#include "evdetect/series.hpp"
#include "evdetect/tree_model.hpp"

namespace evdetect {

struct ExperimentConfig {
  FeatureConfig features = FeatureConfig::offline();
  ModelKind model = ModelKind::GradientBoosted;
  TrainParams params;
  std::uint64_t seed = 7;  ///< feeder split seed
  std::array<double, 3> split_ratios = kDefaultSplitRatios;
  /// Keep every k-th time step of each training feeder. Adjacent minutes
  /// are nearly duplicate rows; test feeders are always scored in full.
  std::size_t train_stride = 10;
  double decision_threshold = 0.5;
};

struct ExperimentResult {
  ExperimentConfig config;
  SplitAssignment split;
  MetricsReport test;
  MetricsReport validation;
  std::size_t train_rows = 0;
  std::vector<double> loss_per_round;
  TreeEnsembleModel model;
};

/// Splits feeders, featurizes, trains on the training feeders and scores the
/// held-out validation and test feeders. Deterministic in (feeders, config).
ExperimentResult run_experiment(const std::vector<FeederRecordSet>& feeders,
                                const ExperimentConfig& config);

/// Run description printed alongside the metrics; "unknown" when not available.
struct ReportContext {
  std::string mode = "unknown";
  std::string model = "unknown";
  std::string window_length = "unknown";
  std::string seed = "unknown";

  static ReportContext of(const ExperimentConfig& config);
};

/// `key=value` lines: mode, model, window_length, precision, recall, f1,
/// accuracy, tp, fp, fn, tn, seed. Undefined metrics print as "undefined".
std::string metrics_report_text(const MetricsReport& report, const ReportContext& context);

/// JSON record of configuration, split and the test-isolation audit.
std::string experiment_manifest_json(const ExperimentResult& result);

/// Writes report.txt and manifest.json into `dir`.
void write_experiment_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

struct SweepRow {
  std::size_t length = 0;
  MetricsReport metrics;
};

/// Feature configuration used for a sweep point: the (long) window becomes
/// `length`. Online, the short window stays as configured while it is
/// shorter than `length` and drops to max(1, length / 4) otherwise.
FeatureConfig sweep_feature_config(const FeatureConfig& base, std::size_t length);

/// One experiment per length with everything else fixed. Lengths must be
/// >= 1 (>= 2 online) and ascending. Throws InvalidConfig.
std::vector<SweepRow> window_length_sweep(const std::vector<std::size_t>& lengths,
                                          const std::vector<FeederRecordSet>& feeders,
                                          const ExperimentConfig& base);

/// `length,precision,recall,f1`
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace evdetect
