#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evdetect/rolling.hpp"
#include "evdetect/series.hpp"
#include "evdetect/window.hpp"

namespace evdetect {

enum class FeatureMode { Offline, Online };

std::string_view to_string(FeatureMode mode) noexcept;
/// Accepts "offline" / "online"; throws InvalidConfig otherwise.
FeatureMode parse_feature_mode(std::string_view text);

/// Feature-set definition.
///
/// Offline: centered, forward and backward windows of `window` samples, each
/// contributing six statistics and a peak count (21 columns).
/// Online: backward windows of `window` and `short_window` samples with six
/// statistics each, plus the peak count of the long one (13 columns).
struct FeatureConfig {
  FeatureMode mode = FeatureMode::Offline;
  std::size_t window = 360;
  std::size_t short_window = 90;   ///< online only
  std::int64_t centered_offset = 0;  ///< offline only
  double theta = 1.0;

  /// Throws InvalidConfig.
  void validate() const;
  std::size_t feature_count() const noexcept {
    return mode == FeatureMode::Offline ? 21 : 13;
  }
  /// Column names in row order, e.g. c360_mean ... b360_peaks.
  std::vector<std::string> column_names() const;

  static FeatureConfig offline(std::size_t window = 360) {
    return {FeatureMode::Offline, window, 90, 0, 1.0};
  }
  static FeatureConfig online(std::size_t window = 360, std::size_t short_window = 90) {
    return {FeatureMode::Online, window, short_window, 0, 1.0};
  }

  bool operator==(const FeatureConfig&) const = default;
};

/// Dense row-major feature table, one row per time step.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(FeatureMode mode, std::vector<std::string> column_names);

  FeatureMode mode() const noexcept { return mode_; }
  const std::vector<std::string>& column_names() const noexcept { return column_names_; }
  std::size_t rows() const noexcept { return cols() == 0 ? 0 : data_.size() / cols(); }
  std::size_t cols() const noexcept { return column_names_.size(); }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols(), cols()};
  }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  /// Throws ShapeMismatch on a wrong width and InvalidSample on non-finite entries.
  void append_row(std::span<const double> values);
  /// Throws SchemaMismatch unless `other` has identical columns.
  void append_rows(const FeatureMatrix& other);
  /// Keeps every `stride`-th row starting at row 0.
  FeatureMatrix every_nth_row(std::size_t stride) const;
  void reserve_rows(std::size_t n) { data_.reserve(n * cols()); }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  FeatureMode mode_ = FeatureMode::Offline;
  std::vector<std::string> column_names_;
  std::vector<double> data_;
};

/// Per-step offline extraction by direct evaluation over each window.
/// Throws IndexOutOfRange.
std::vector<double> extract_offline_features(const LoadSeries& load, std::size_t t,
                                             const FeatureConfig& config);

/// Per-step online extraction; reads only samples [0, t].
std::vector<double> extract_online_features(const LoadSeries& load, std::size_t t,
                                            const FeatureConfig& config);

/// Whole-series featurization using rolling accumulators. Order statistics
/// and peak counts match the per-step extractors exactly; moments agree to
/// within ~1e-12 relative.
FeatureMatrix featurize_series(const LoadSeries& load, const FeatureConfig& config);

/// Causal online extractor fed one sample at a time. After k pushes the
/// output matches extract_online_features at t = k-1. Retains at most
/// `window + 1` raw samples.
class StreamingOnlineExtractor {
 public:
  /// Throws InvalidConfig unless config.mode is Online.
  explicit StreamingOnlineExtractor(const FeatureConfig& config);

  /// Throws InvalidSample for non-finite or negative samples.
  std::vector<double> push(double sample);
  /// Writes the 13 features into `out` without allocating.
  void push(double sample, std::span<double> out);

  std::uint64_t samples_seen() const noexcept { return seen_; }
  const FeatureConfig& config() const noexcept { return config_; }

 private:
  FeatureConfig config_;
  std::vector<double> ring_;  // capacity window + 1
  std::uint64_t seen_ = 0;
  RollingAccumulator long_;
  RollingAccumulator short_;
};

/// Feature CSV: `timestamp,<columns...>[,label]`.
void write_feature_csv(const FeatureMatrix& features, const LoadSeries& load,
                       const ChargingLabelSeries* labels, const std::filesystem::path& path);

struct FeatureTable {
  std::vector<Timestamp> timestamps;
  FeatureMatrix features;
  std::optional<ChargingLabelSeries> labels;
};

/// Reads a feature CSV; the mode is inferred from the column schema.
/// Throws SchemaMismatch / MalformedRow.
FeatureTable read_feature_csv(const std::filesystem::path& path);

/// Reconstructs the FeatureConfig that produced a column schema, except
/// for theta which is not encoded in names. Throws SchemaMismatch.
FeatureConfig config_from_schema(std::span<const std::string> column_names);

}  // namespace evdetect
