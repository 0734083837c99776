#include "evdetect/experiment.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "evdetect/csv_io.hpp"

namespace evdetect {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string metric_text(const std::optional<double>& value) {
  return value ? format_double(*value) : "undefined";
}

ordered_json metric_json(const std::optional<double>& value) {
  return value ? ordered_json(*value) : ordered_json(nullptr);
}

ordered_json report_json(const MetricsReport& report) {
  return {{"precision", metric_json(report.precision)},
          {"recall", metric_json(report.recall)},
          {"f1", metric_json(report.f1)},
          {"accuracy", metric_json(report.accuracy)},
          {"tp", report.counts.tp},
          {"fp", report.counts.fp},
          {"fn", report.counts.fn},
          {"tn", report.counts.tn}};
}

MetricsReport score(const TreeEnsembleModel& model, const FeatureConfig& config,
                    const std::vector<const FeederRecordSet*>& feeders, double threshold) {
  ConfusionCounts total;
  for (const auto* feeder : feeders) {
    const FeatureMatrix features = featurize_series(feeder->load(), config);
    total += confusion(feeder->labels(), classify(model, features, threshold));
  }
  return metrics(total);
}

}  // namespace

ExperimentResult run_experiment(const std::vector<FeederRecordSet>& feeders,
                                const ExperimentConfig& config) {
  config.features.validate();
  config.params.validate();
  if (config.train_stride < 1) {
    throw Error(ErrorCode::InvalidConfig, "train_stride must be >= 1");
  }
  std::map<std::string, const FeederRecordSet*> by_id;
  std::vector<std::string> ids;
  for (const auto& feeder : feeders) {
    if (!by_id.emplace(feeder.feeder_id(), &feeder).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate feeder id " + feeder.feeder_id());
    }
    ids.push_back(feeder.feeder_id());
  }

  ExperimentResult result;
  result.config = config;
  result.split = split_by_feeder(ids, config.seed, config.split_ratios);

  const auto lookup = [&](const std::vector<std::string>& names) {
    std::vector<const FeederRecordSet*> out;
    for (const auto& name : names) {
      out.push_back(by_id.at(name));
    }
    return out;
  };

  FeatureMatrix train_features(config.features.mode, config.features.column_names());
  std::vector<std::uint8_t> train_labels;
  for (const auto* feeder : lookup(result.split.train)) {
    const FeatureMatrix all = featurize_series(feeder->load(), config.features);
    train_features.append_rows(all.every_nth_row(config.train_stride));
    for (std::size_t t = 0; t < feeder->labels().size(); t += config.train_stride) {
      train_labels.push_back(feeder->labels()[t]);
    }
  }
  result.train_rows = train_features.rows();

  TrainResult trained = train_model(config.model, train_features,
                                    ChargingLabelSeries(std::move(train_labels)), config.params);
  trained.model.feature_config = config.features;
  result.loss_per_round = std::move(trained.loss_per_round);
  result.model = std::move(trained.model);

  result.validation = score(result.model, config.features, lookup(result.split.validation),
                            config.decision_threshold);
  result.test = score(result.model, config.features, lookup(result.split.test),
                      config.decision_threshold);
  return result;
}

ReportContext ReportContext::of(const ExperimentConfig& config) {
  return {std::string(to_string(config.features.mode)), std::string(to_string(config.model)),
          std::to_string(config.features.window), std::to_string(config.seed)};
}

std::string metrics_report_text(const MetricsReport& report, const ReportContext& context) {
  std::string out;
  out += "mode=" + context.mode + "\n";
  out += "model=" + context.model + "\n";
  out += "window_length=" + context.window_length + "\n";
  out += "precision=" + metric_text(report.precision) + "\n";
  out += "recall=" + metric_text(report.recall) + "\n";
  out += "f1=" + metric_text(report.f1) + "\n";
  out += "accuracy=" + metric_text(report.accuracy) + "\n";
  out += "tp=" + std::to_string(report.counts.tp) + "\n";
  out += "fp=" + std::to_string(report.counts.fp) + "\n";
  out += "fn=" + std::to_string(report.counts.fn) + "\n";
  out += "tn=" + std::to_string(report.counts.tn) + "\n";
  out += "seed=" + context.seed + "\n";
  return out;
}

std::string experiment_manifest_json(const ExperimentResult& result) {
  const auto& c = result.config;
  std::set<std::string> fitted(result.split.train.begin(), result.split.train.end());
  fitted.insert(result.split.validation.begin(), result.split.validation.end());
  const bool isolated = std::none_of(result.split.test.begin(), result.split.test.end(),
                                     [&](const std::string& id) { return fitted.count(id) > 0; });

  ordered_json manifest;
  manifest["mode"] = std::string(to_string(c.features.mode));
  manifest["model"] = std::string(to_string(c.model));
  manifest["features"] = {{"window", c.features.window},
                          {"short_window", c.features.short_window},
                          {"centered_offset", c.features.centered_offset},
                          {"theta", c.features.theta},
                          {"columns", c.features.column_names()}};
  manifest["seed"] = c.seed;
  manifest["split_ratios"] = c.split_ratios;
  manifest["train_stride"] = c.train_stride;
  manifest["decision_threshold"] = c.decision_threshold;
  const auto& f = c.params.forest;
  const auto& b = c.params.boosting;
  manifest["train_params"] = {
      {"forest",
       {{"n_trees", f.n_trees},
        {"max_depth", f.max_depth},
        {"min_samples_leaf", f.min_samples_leaf},
        {"features_per_split", f.features_per_split},
        {"bootstrap", f.bootstrap},
        {"seed", f.seed}}},
      {"boosting",
       {{"n_rounds", b.n_rounds},
        {"max_depth", b.max_depth},
        {"learning_rate", b.learning_rate},
        {"l2_leaf_regularization", b.l2_leaf_regularization},
        {"min_child_weight", b.min_child_weight},
        {"positive_class_weight", b.positive_class_weight},
        {"seed", b.seed}}}};
  manifest["split"] = {{"train", result.split.train},
                       {"validation", result.split.validation},
                       {"test", result.split.test}};
  manifest["test_isolation"] = {{"test_feeders_disjoint_from_fitting", isolated}};
  manifest["train_rows"] = result.train_rows;
  manifest["validation_metrics"] = report_json(result.validation);
  manifest["test_metrics"] = report_json(result.test);
  return manifest.dump(2) + "\n";
}

void write_experiment_artifacts(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  }
  write_text_file(dir / "report.txt",
                  metrics_report_text(result.test, ReportContext::of(result.config)));
  write_text_file(dir / "manifest.json", experiment_manifest_json(result));
}

FeatureConfig sweep_feature_config(const FeatureConfig& base, std::size_t length) {
  FeatureConfig config = base;
  config.window = length;
  if (config.mode == FeatureMode::Online && config.short_window >= length) {
    config.short_window = std::max<std::size_t>(1, length / 4);
  }
  config.validate();
  return config;
}

std::vector<SweepRow> window_length_sweep(const std::vector<std::size_t>& lengths,
                                          const std::vector<FeederRecordSet>& feeders,
                                          const ExperimentConfig& base) {
  if (lengths.empty()) {
    throw Error(ErrorCode::InvalidConfig, "sweep needs at least one window length");
  }
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1 || (i > 0 && lengths[i] <= lengths[i - 1])) {
      throw Error(ErrorCode::InvalidConfig, "sweep lengths must be >= 1 and strictly ascending");
    }
  }
  std::vector<SweepRow> rows;
  for (std::size_t length : lengths) {
    ExperimentConfig config = base;
    config.features = sweep_feature_config(base.features, length);
    rows.push_back({length, run_experiment(feeders, config).test});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "length,precision,recall,f1\n";
  for (const auto& row : rows) {
    out += std::to_string(row.length) + "," + metric_text(row.metrics.precision) + "," +
           metric_text(row.metrics.recall) + "," + metric_text(row.metrics.f1) + "\n";
  }
  return out;
}

}  // namespace evdetect
