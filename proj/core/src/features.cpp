#include "evdetect/features.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <utility>

#include "evdetect/csv_io.hpp"

namespace evdetect {

namespace {

constexpr std::array<std::string_view, 6> kStatNames = {"mean", "std", "var",
                                                        "min",  "max", "median"};

void append_stats(std::vector<std::string>& names, char prefix, std::size_t length,
                  bool with_peaks) {
  const std::string stem = std::string(1, prefix) + std::to_string(length) + "_";
  for (auto stat : kStatNames) {
    names.push_back(stem + std::string(stat));
  }
  if (with_peaks) {
    names.push_back(stem + "peaks");
  }
}

void write_stats(const WindowStats& s, double* out) {
  out[0] = s.mean;
  out[1] = s.std_dev;
  out[2] = s.variance;
  out[3] = s.minimum;
  out[4] = s.maximum;
  out[5] = s.median;
}

void append_direct_block(std::vector<double>& out, std::span<const double> values,
                         IndexRange range, PeakThreshold theta, bool with_peaks) {
  auto window = values.subspan(range.lo, range.size());
  double block[6];
  write_stats(compute_window_stats(window), block);
  out.insert(out.end(), block, block + 6);
  if (with_peaks) {
    out.push_back(static_cast<double>(count_peaks(window, theta)));
  }
}

std::size_t unclamped_size(const WindowSpec& spec) {
  if (spec.kind() == WindowKind::Centered) {
    return 2 * ((spec.length() + 1) / 2) + 1;
  }
  return spec.length() + 1;
}

// Slides one window over the series, writing 6 statistics per row starting
// at `stats_col` and the peak count at `peaks_col`. Window edges are
// monotone in t, so each sample is pushed and popped at most once.
void fill_block(std::span<const double> values, const WindowSpec& spec, PeakThreshold theta,
                std::optional<std::size_t> stats_col, std::optional<std::size_t> peaks_col,
                std::vector<double>& data, std::size_t width) {
  const std::size_t n = values.size();
  RollingAccumulator acc(theta, unclamped_size(spec));
  for (std::size_t t = 0; t < n; ++t) {
    const IndexRange r = window_bounds(spec, t, n);
    while (!acc.empty() && acc.begin_index() < r.lo) {
      const auto b = static_cast<std::size_t>(acc.begin_index());
      acc.pop_front(values[b], b + 1 < n ? values[b + 1] : 0.0);
    }
    if (acc.empty() && acc.begin_index() < r.lo) {
      acc.reset(r.lo);
    }
    while (acc.end_index() <= r.hi) {
      acc.push_back(values[static_cast<std::size_t>(acc.end_index())]);
    }
    double* row = data.data() + t * width;
    if (stats_col) {
      write_stats(acc.stats(), row + *stats_col);
    }
    if (peaks_col) {
      row[*peaks_col] = static_cast<double>(acc.peaks());
    }
  }
}

std::size_t parse_length(std::string_view name, std::size_t& pos) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(name.data() + pos, name.data() + name.size(), value);
  if (ec != std::errc{} || ptr == name.data() + pos) {
    throw Error(ErrorCode::SchemaMismatch, "bad feature column '" + std::string(name) + "'");
  }
  pos = static_cast<std::size_t>(ptr - name.data());
  return value;
}

}  // namespace

std::string_view to_string(FeatureMode mode) noexcept {
  return mode == FeatureMode::Offline ? "offline" : "online";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "offline") return FeatureMode::Offline;
  if (text == "online") return FeatureMode::Online;
  throw Error(ErrorCode::InvalidConfig, "mode must be 'offline' or 'online'");
}

void FeatureConfig::validate() const {
  if (window < 1) {
    throw Error(ErrorCode::InvalidConfig, "window length must be >= 1");
  }
  PeakThreshold{theta};
  if (mode == FeatureMode::Online) {
    if (short_window < 1 || short_window >= window) {
      throw Error(ErrorCode::InvalidConfig,
                  "online short window must satisfy 1 <= short_window < window");
    }
    if (centered_offset != 0) {
      throw Error(ErrorCode::InvalidConfig, "online features take no centered offset");
    }
  }
}

std::vector<std::string> FeatureConfig::column_names() const {
  std::vector<std::string> names;
  if (mode == FeatureMode::Offline) {
    append_stats(names, 'c', window, true);
    append_stats(names, 'f', window, true);
    append_stats(names, 'b', window, true);
  } else {
    append_stats(names, 'b', window, false);
    append_stats(names, 'b', short_window, false);
    names.push_back("b" + std::to_string(window) + "_peaks");
  }
  return names;
}

FeatureMatrix::FeatureMatrix(FeatureMode mode, std::vector<std::string> column_names)
    : mode_(mode), column_names_(std::move(column_names)) {}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (values.size() != cols()) {
    throw Error(ErrorCode::ShapeMismatch, "row width does not match schema");
  }
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      throw Error(ErrorCode::InvalidSample, "non-finite feature in column " + column_names_[j],
                  rows());
    }
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void FeatureMatrix::append_rows(const FeatureMatrix& other) {
  if (other.column_names_ != column_names_) {
    throw Error(ErrorCode::SchemaMismatch, "feature schemas differ");
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

FeatureMatrix FeatureMatrix::every_nth_row(std::size_t stride) const {
  if (stride == 0) {
    throw Error(ErrorCode::InvalidConfig, "stride must be >= 1");
  }
  FeatureMatrix out(mode_, column_names_);
  out.reserve_rows(rows() / stride + 1);
  for (std::size_t i = 0; i < rows(); i += stride) {
    auto r = row(i);
    out.data_.insert(out.data_.end(), r.begin(), r.end());
  }
  return out;
}

std::vector<double> extract_offline_features(const LoadSeries& load, std::size_t t,
                                             const FeatureConfig& config) {
  const std::size_t n = load.size();
  const PeakThreshold theta(config.theta);
  std::vector<double> out;
  out.reserve(21);
  const auto values = load.values();
  append_direct_block(out, values,
                      window_bounds(WindowSpec::centered(config.window, config.centered_offset),
                                    t, n),
                      theta, true);
  append_direct_block(out, values, window_bounds(WindowSpec::forward(config.window), t, n),
                      theta, true);
  append_direct_block(out, values, window_bounds(WindowSpec::backward(config.window), t, n),
                      theta, true);
  return out;
}

std::vector<double> extract_online_features(const LoadSeries& load, std::size_t t,
                                            const FeatureConfig& config) {
  if (t >= load.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "time index beyond series", t);
  }
  const PeakThreshold theta(config.theta);
  const auto past = load.values().first(t + 1);
  std::vector<double> out;
  out.reserve(13);
  const IndexRange long_range = window_bounds(WindowSpec::backward(config.window), t, t + 1);
  append_direct_block(out, past, long_range, theta, false);
  append_direct_block(out, past,
                      window_bounds(WindowSpec::backward(config.short_window), t, t + 1), theta,
                      false);
  out.push_back(
      static_cast<double>(count_peaks(past.subspan(long_range.lo, long_range.size()), theta)));
  return out;
}

FeatureMatrix featurize_series(const LoadSeries& load, const FeatureConfig& config) {
  config.validate();
  const PeakThreshold theta(config.theta);
  const std::size_t width = config.feature_count();
  const auto values = load.values();
  std::vector<double> data(values.size() * width);
  if (config.mode == FeatureMode::Offline) {
    fill_block(values, WindowSpec::centered(config.window, config.centered_offset), theta, 0, 6,
               data, width);
    fill_block(values, WindowSpec::forward(config.window), theta, 7, 13, data, width);
    fill_block(values, WindowSpec::backward(config.window), theta, 14, 20, data, width);
  } else {
    fill_block(values, WindowSpec::backward(config.window), theta, 0, 12, data, width);
    fill_block(values, WindowSpec::backward(config.short_window), theta, 6, std::nullopt, data,
               width);
  }
  FeatureMatrix matrix(config.mode, config.column_names());
  matrix.reserve_rows(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    matrix.append_row(std::span<const double>(data.data() + t * width, width));
  }
  return matrix;
}

StreamingOnlineExtractor::StreamingOnlineExtractor(const FeatureConfig& config)
    : config_(config),
      ring_(config.window + 1, 0.0),
      long_(PeakThreshold(config.theta), config.window + 1),
      short_(PeakThreshold(config.theta), config.short_window + 1) {
  if (config_.mode != FeatureMode::Online) {
    throw Error(ErrorCode::InvalidConfig, "streaming extraction requires the online feature set");
  }
  config_.validate();
}

std::vector<double> StreamingOnlineExtractor::push(double sample) {
  std::vector<double> out(13);
  push(sample, out);
  return out;
}

void StreamingOnlineExtractor::push(double sample, std::span<double> out) {
  if (!std::isfinite(sample) || sample < 0.0) {
    throw Error(ErrorCode::InvalidSample, "sample must be finite and >= 0", seen_);
  }
  if (out.size() != 13) {
    throw Error(ErrorCode::ShapeMismatch, "online feature vector has 13 entries");
  }
  const std::size_t cap = ring_.size();
  const auto at = [&](std::uint64_t i) { return ring_[static_cast<std::size_t>(i % cap)]; };

  // Same pop-then-push order as the batch path, so results are bit-identical.
  const std::uint64_t k = seen_;
  if (k > config_.window) {
    long_.pop_front(at(k - config_.window - 1), at(k - config_.window));
  }
  if (k > config_.short_window) {
    short_.pop_front(at(k - config_.short_window - 1), at(k - config_.short_window));
  }
  ring_[static_cast<std::size_t>(k % cap)] = sample;
  long_.push_back(sample);
  short_.push_back(sample);
  ++seen_;

  write_stats(long_.stats(), out.data());
  write_stats(short_.stats(), out.data() + 6);
  out[12] = static_cast<double>(long_.peaks());
}

void write_feature_csv(const FeatureMatrix& features, const LoadSeries& load,
                       const ChargingLabelSeries* labels, const std::filesystem::path& path) {
  if (features.rows() != load.size() || (labels && labels->size() != load.size())) {
    throw Error(ErrorCode::LengthMismatch, "features, load and labels must align");
  }
  std::string text;
  text.reserve(features.rows() * features.cols() * 12);
  text += "timestamp";
  for (const auto& name : features.column_names()) {
    text += ',';
    text += name;
  }
  if (labels) {
    text += ",label";
  }
  text += '\n';
  for (std::size_t t = 0; t < features.rows(); ++t) {
    text += format_timestamp(load.timestamp_at(t));
    for (double v : features.row(t)) {
      text += ',';
      text += format_double(v);
    }
    if (labels) {
      text += (*labels)[t] ? ",1" : ",0";
    }
    text += '\n';
  }
  write_text_file(path, text);
}

FeatureConfig config_from_schema(std::span<const std::string> column_names) {
  FeatureConfig config;
  if (column_names.size() == 21 && !column_names[0].empty() && column_names[0][0] == 'c') {
    std::size_t pos = 1;
    config = FeatureConfig::offline(parse_length(column_names[0], pos));
  } else if (column_names.size() == 13 && !column_names[6].empty() && column_names[6][0] == 'b') {
    std::size_t pos = 1;
    const std::size_t window = parse_length(column_names[0], pos);
    pos = 1;
    const std::size_t short_window = parse_length(column_names[6], pos);
    config = FeatureConfig::online(window, short_window);
  } else {
    throw Error(ErrorCode::SchemaMismatch, "unrecognized feature schema");
  }
  const auto expected = config.column_names();
  if (!std::equal(expected.begin(), expected.end(), column_names.begin(), column_names.end())) {
    throw Error(ErrorCode::SchemaMismatch, "feature columns are not in canonical order");
  }
  return config;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw Error(ErrorCode::SchemaMismatch, "empty feature file " + path.string());
  }
  auto header = split_csv_line(lines.front());
  if (header.empty() || header.front() != "timestamp") {
    throw Error(ErrorCode::SchemaMismatch, "feature file must start with a timestamp column");
  }
  const bool has_labels = header.back() == "label";
  std::vector<std::string> names(header.begin() + 1, header.end() - (has_labels ? 1 : 0));
  const FeatureConfig config = config_from_schema(names);

  FeatureTable table;
  table.features = FeatureMatrix(config.mode, names);
  table.features.reserve_rows(lines.size() - 1);
  std::vector<std::uint8_t> labels;
  std::vector<double> row(names.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) {
      break;
    }
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "wrong field count in " + path.string(), i);
    }
    try {
      table.timestamps.push_back(parse_timestamp(fields[0]));
      for (std::size_t j = 0; j < names.size(); ++j) {
        row[j] = parse_double(fields[j + 1]);
      }
      table.features.append_row(row);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, e.what(), i);
    }
    if (has_labels) {
      const auto& label = fields.back();
      if (label != "0" && label != "1") {
        throw Error(ErrorCode::MalformedRow, "label must be 0 or 1", i);
      }
      labels.push_back(label == "1" ? 1 : 0);
    }
  }
  if (has_labels) {
    table.labels = ChargingLabelSeries(std::move(labels));
  }
  return table;
}

}  // namespace evdetect
