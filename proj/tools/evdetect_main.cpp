// evdetect: feeder-level EV charging detection pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
// single `error: ...` line to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evdetect/csv_io.hpp"
#include "evdetect/experiment.hpp"
#include "evdetect/features.hpp"
#include "evdetect/model_io.hpp"
#include "evdetect/synth.hpp"
#include "evdetect/tree_model.hpp"

namespace fs = std::filesystem;
using namespace evdetect;

namespace {

/// Usage error detected after parsing (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFlags {
  std::size_t n_trees = RandomForestParams{}.n_trees;
  std::size_t rf_max_depth = RandomForestParams{}.max_depth;
  std::size_t min_samples_leaf = RandomForestParams{}.min_samples_leaf;
  std::size_t features_per_split = RandomForestParams{}.features_per_split;
  bool no_bootstrap = false;
  std::size_t rounds = GbdtParams{}.n_rounds;
  std::size_t gbdt_max_depth = GbdtParams{}.max_depth;
  double learning_rate = GbdtParams{}.learning_rate;
  double lambda = GbdtParams{}.l2_leaf_regularization;
  double min_child_weight = GbdtParams{}.min_child_weight;
  double positive_weight = GbdtParams{}.positive_class_weight;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--n-trees", n_trees, "Random forest: number of trees");
    cmd.add_option("--rf-max-depth", rf_max_depth, "Random forest: maximum depth");
    cmd.add_option("--min-samples-leaf", min_samples_leaf, "Random forest: minimum leaf weight");
    cmd.add_option("--features-per-split", features_per_split,
                   "Random forest: candidate features per split (0 = ceil(sqrt(d)))");
    cmd.add_flag("--no-bootstrap", no_bootstrap, "Random forest: grow on the full sample");
    cmd.add_option("--rounds", rounds, "Boosting: number of rounds");
    cmd.add_option("--gbdt-max-depth", gbdt_max_depth, "Boosting: maximum depth");
    cmd.add_option("--learning-rate", learning_rate, "Boosting: shrinkage");
    cmd.add_option("--lambda", lambda, "Boosting: L2 leaf regularization");
    cmd.add_option("--min-child-weight", min_child_weight, "Boosting: minimum child hessian");
    cmd.add_option("--positive-weight", positive_weight, "Boosting: positive class weight");
  }

  TrainParams params(std::uint64_t seed) const {
    TrainParams p;
    p.forest = {n_trees, rf_max_depth, min_samples_leaf, features_per_split, !no_bootstrap, seed};
    p.boosting = {rounds,           gbdt_max_depth,  learning_rate, lambda,
                  min_child_weight, positive_weight, seed};
    return p;
  }
};

std::vector<std::size_t> parse_lengths(const std::string& text) {
  std::vector<std::size_t> lengths;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long value = std::stol(item, &used);
      if (used != item.size() || value < 1) {
        throw std::invalid_argument(item);
      }
      lengths.push_back(static_cast<std::size_t>(value));
    } catch (const std::exception&) {
      throw UsageError("--lengths expects positive integers separated by commas, got '" + item +
                       "'");
    }
  }
  if (lengths.empty()) {
    throw UsageError("--lengths is empty");
  }
  return lengths;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::uint8_t> read_label_column(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + " is empty");
  }
  const auto header = split_csv_line(lines.front());
  std::optional<std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") {
      column = i;
    }
  }
  if (!column) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + " has no label column");
  }
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) {
      break;
    }
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size() || (fields[*column] != "0" && fields[*column] != "1")) {
      throw Error(ErrorCode::MalformedRow, "bad row in " + path.string(), i);
    }
    labels.push_back(fields[*column] == "1" ? 1 : 0);
  }
  return labels;
}

// --- subcommands -----------------------------------------------------------

struct SynthArgs {
  std::size_t feeders = 22;
  std::size_t households = 3;
  std::size_t days = 30;
  std::uint64_t seed = 7;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  FeederSynthConfig config;
  config.num_feeders = a.feeders;
  config.households_per_feeder = a.households;
  config.days = a.days;
  config.rng_seed = a.seed;
  const SynthBenchmark benchmark = generate_benchmark(config);
  write_benchmark(benchmark, a.out);
  std::cerr << "wrote " << benchmark.feeders.size() << " feeders to " << a.out << "\n";
  return 0;
}

struct FeaturizeArgs {
  std::string input;
  std::string mode = "offline";
  std::size_t window = 360;
  std::size_t short_window = 90;
  std::int64_t offset = 0;
  double theta = 1.0;
  bool no_labels = false;
  std::string out;
};

FeatureConfig feature_config_from(const std::string& mode, std::size_t window,
                                  std::size_t short_window, std::int64_t offset, double theta) {
  FeatureConfig config;
  try {
    config.mode = parse_feature_mode(mode);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  config.window = window;
  config.short_window = short_window;
  config.centered_offset = offset;
  config.theta = theta;
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return config;
}

int run_featurize(const FeaturizeArgs& a) {
  const FeatureConfig config =
      feature_config_from(a.mode, a.window, a.short_window, a.offset, a.theta);
  const FeederRecordSet feeder = read_feeder_csv(a.input);
  const FeatureMatrix features = featurize_series(feeder.load(), config);
  write_feature_csv(features, feeder.load(), a.no_labels ? nullptr : &feeder.labels(), a.out);
  return 0;
}

struct TrainArgs {
  std::vector<std::string> features;
  std::string model = "gbdt";
  std::uint64_t seed = 7;
  std::size_t stride = 1;
  double theta = 1.0;
  std::string out;
  ModelFlags flags;
};

int run_train(const TrainArgs& a) {
  ModelKind kind;
  try {
    kind = parse_model_kind(a.model);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.stride < 1) {
    throw UsageError("--stride must be >= 1");
  }
  std::optional<FeatureMatrix> matrix;
  std::vector<std::uint8_t> labels;
  for (const auto& path : a.features) {
    FeatureTable table = read_feature_csv(path);
    if (!table.labels) {
      throw Error(ErrorCode::SchemaMismatch, path + " has no label column");
    }
    FeatureMatrix rows = table.features.every_nth_row(a.stride);
    for (std::size_t t = 0; t < table.labels->size(); t += a.stride) {
      labels.push_back((*table.labels)[t]);
    }
    if (!matrix) {
      matrix = std::move(rows);
    } else {
      matrix->append_rows(rows);
    }
  }
  TrainResult result =
      train_model(kind, *matrix, ChargingLabelSeries(std::move(labels)), a.flags.params(a.seed));
  FeatureConfig config = config_from_schema(matrix->column_names());
  config.theta = a.theta;
  result.model.feature_config = config;
  if (result.degenerate_data) {
    std::cerr << "warning: all training rows are identical with mixed labels\n";
  }
  save_model(result.model, a.out);
  return 0;
}

struct DetectArgs {
  std::string model;
  std::string features;
  std::string out;
  double threshold = 0.5;
  bool stream = false;
};

std::string prediction_line(Timestamp ts, double probability, double threshold) {
  return format_timestamp(ts) + "," + format_double(probability) +
         (probability > threshold ? ",1\n" : ",0\n");
}

int run_detect_stream(const TreeEnsembleModel& model, double threshold) {
  if (!model.feature_config || model.feature_config->mode != FeatureMode::Online) {
    throw Error(ErrorCode::SchemaMismatch, "--stream needs a model trained on online features");
  }
  StreamingOnlineExtractor extractor(*model.feature_config);
  std::vector<double> row(13);
  std::string line;
  std::size_t line_number = 0;
  std::fputs("timestamp,probability,label\n", stdout);
  std::fflush(stdout);
  while (std::getline(std::cin, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || (line_number == 1 && line.rfind("timestamp", 0) == 0)) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() < 2) {
      throw Error(ErrorCode::MalformedRow, "expected timestamp,load_kw", line_number);
    }
    Timestamp ts;
    double load;
    try {
      ts = parse_timestamp(fields[0]);
      load = parse_double(fields[1]);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, e.what(), line_number);
    }
    extractor.push(load, row);
    const std::string out = prediction_line(ts, predict_row(model, row), threshold);
    std::fwrite(out.data(), 1, out.size(), stdout);
    std::fflush(stdout);
  }
  return 0;
}

int run_detect(const DetectArgs& a) {
  const TreeEnsembleModel model = load_model(a.model);
  if (a.stream) {
    return run_detect_stream(model, a.threshold);
  }
  const FeatureTable table = read_feature_csv(a.features);
  const auto probabilities = predict_proba(model, table.features);
  std::string text = "timestamp,probability,label\n";
  for (std::size_t t = 0; t < probabilities.size(); ++t) {
    text += prediction_line(table.timestamps[t], probabilities[t], a.threshold);
  }
  write_output(a.out, text);
  return 0;
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string out;
  ReportContext context;
};

int run_evaluate(const EvaluateArgs& a) {
  const ChargingLabelSeries predicted(read_label_column(a.pred));
  const ChargingLabelSeries truth(read_label_column(a.truth));
  const MetricsReport report = metrics(confusion(truth, predicted));
  write_output(a.out, metrics_report_text(report, a.context));
  return 0;
}

struct ExperimentArgs {
  std::string data;
  std::string mode = "offline";
  std::string model = "gbdt";
  std::size_t window = 360;
  std::size_t short_window = 90;
  std::uint64_t seed = 7;
  std::size_t stride = ExperimentConfig{}.train_stride;
  double threshold = 0.5;
  std::string lengths;
  std::string out;
  ModelFlags flags;
};

ExperimentConfig experiment_config_from(const ExperimentArgs& a) {
  ExperimentConfig config;
  config.features = feature_config_from(a.mode, a.window, a.short_window, 0, 1.0);
  try {
    config.model = parse_model_kind(a.model);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  config.params = a.flags.params(a.seed);
  config.seed = a.seed;
  config.train_stride = a.stride;
  config.decision_threshold = a.threshold;
  if (config.train_stride < 1) {
    throw UsageError("--stride must be >= 1");
  }
  return config;
}

int run_experiment_cmd(const ExperimentArgs& a) {
  const ExperimentConfig config = experiment_config_from(a);
  const auto feeders = read_benchmark_feeders(a.data);
  const ExperimentResult result = run_experiment(feeders, config);
  write_experiment_artifacts(result, a.out);
  save_model(result.model, fs::path(a.out) / "model.json");
  std::cout << metrics_report_text(result.test, ReportContext::of(config));
  return 0;
}

int run_sweep(const ExperimentArgs& a) {
  const auto lengths = parse_lengths(a.lengths);
  ExperimentConfig config = experiment_config_from(a);
  try {
    for (std::size_t length : lengths) {
      sweep_feature_config(config.features, length);
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto feeders = read_benchmark_feeders(a.data);
  write_output(a.out, sweep_csv(window_length_sweep(lengths, feeders, config)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feeder-level EV charging detection with sliding-window features"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic feeder benchmark");
  synth_cmd->add_option("--feeders", synth.feeders, "Number of feeders")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--households", synth.households, "Households per feeder")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--days", synth.days, "Days of minute data")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  FeaturizeArgs featurize;
  auto* featurize_cmd = app.add_subcommand("featurize", "Write the feature CSV of a feeder CSV");
  featurize_cmd->add_option("--input", featurize.input, "Feeder CSV")->required();
  featurize_cmd->add_option("--mode", featurize.mode, "offline | online");
  featurize_cmd->add_option("--window", featurize.window, "Window length in samples");
  featurize_cmd->add_option("--short-window", featurize.short_window,
                            "Online second backward window");
  featurize_cmd->add_option("--offset", featurize.offset, "Centered window offset (offline)");
  featurize_cmd->add_option("--theta", featurize.theta, "Peak relative-rise threshold");
  featurize_cmd->add_flag("--no-labels", featurize.no_labels, "Omit the label column");
  featurize_cmd->add_option("--out", featurize.out, "Feature CSV to write")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on feature CSVs");
  train_cmd->add_option("--features", train.features, "Labelled feature CSV(s)")
      ->required()
      ->delimiter(',');
  train_cmd->add_option("--model", train.model, "gbdt | rf");
  train_cmd->add_option("--seed", train.seed, "RNG seed");
  train_cmd->add_option("--stride", train.stride, "Keep every k-th training row");
  train_cmd->add_option("--theta", train.theta, "Peak threshold the features were built with");
  train_cmd->add_option("--out", train.out, "Model file to write")->required();
  train.flags.add_to(*train_cmd);

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "Predict charging state per time step");
  detect_cmd->add_option("--model", detect.model, "Model file")->required();
  detect_cmd->add_option("--features", detect.features, "Feature CSV (batch mode)");
  detect_cmd->add_option("--out", detect.out, "Prediction CSV (batch mode, '-' for stdout)");
  detect_cmd->add_option("--threshold", detect.threshold, "Decision threshold");
  detect_cmd->add_flag("--stream", detect.stream,
                       "Read timestamp,load_kw rows from stdin; answer each row immediately");

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predicted labels against truth");
  evaluate_cmd->add_option("--pred", evaluate.pred, "CSV with a label column")->required();
  evaluate_cmd->add_option("--truth", evaluate.truth, "CSV with a label column")->required();
  evaluate_cmd->add_option("--out", evaluate.out, "Report file ('-' or omitted for stdout)");
  evaluate_cmd->add_option("--mode", evaluate.context.mode, "Mode recorded in the report");
  evaluate_cmd->add_option("--model-kind", evaluate.context.model, "Model recorded in the report");
  evaluate_cmd->add_option("--window", evaluate.context.window_length,
                           "Window length recorded in the report");
  evaluate_cmd->add_option("--seed", evaluate.context.seed, "Seed recorded in the report");

  ExperimentArgs experiment;
  auto* experiment_cmd =
      app.add_subcommand("experiment", "Split, featurize, train and score a synth directory");
  ExperimentArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Window-length sweep over a synth directory");
  for (auto [cmd, args] : {std::pair{experiment_cmd, &experiment}, std::pair{sweep_cmd, &sweep}}) {
    cmd->add_option("--data", args->data, "Directory written by `synth`")->required();
    cmd->add_option("--mode", args->mode, "offline | online");
    cmd->add_option("--model", args->model, "gbdt | rf");
    cmd->add_option("--seed", args->seed, "Split and training seed");
    cmd->add_option("--stride", args->stride, "Keep every k-th training row");
    cmd->add_option("--threshold", args->threshold, "Decision threshold");
    args->flags.add_to(*cmd);
  }
  experiment_cmd->add_option("--window", experiment.window, "Window length");
  experiment_cmd->add_option("--short-window", experiment.short_window,
                             "Online second backward window");
  experiment_cmd->add_option("--out", experiment.out, "Artifact directory")->required();
  sweep_cmd->add_option("--lengths", sweep.lengths, "Comma-separated window lengths")->required();
  sweep_cmd->add_option("--out", sweep.out, "Sweep CSV ('-' or omitted for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (detect_cmd->parsed() && !detect.stream && (detect.features.empty() || detect.out.empty())) {
      throw UsageError("detect needs --features and --out unless --stream is given");
    }
    if (synth_cmd->parsed()) return run_synth(synth);
    if (featurize_cmd->parsed()) return run_featurize(featurize);
    if (train_cmd->parsed()) return run_train(train);
    if (detect_cmd->parsed()) return run_detect(detect);
    if (evaluate_cmd->parsed()) return run_evaluate(evaluate);
    if (experiment_cmd->parsed()) return run_experiment_cmd(experiment);
    if (sweep_cmd->parsed()) return run_sweep(sweep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
