#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace evdetect {

enum class WindowKind { Forward, Centered, Backward };

std::string_view to_string(WindowKind kind) noexcept;

/// Sliding-window geometry. Windows are inclusive at both edges:
///   Forward  [t, t+n]
///   Backward [t-n, t]
///   Centered [t-ceil(n/2)+offset, t+ceil(n/2)+offset]
/// and are clamped to the series.
class WindowSpec {
 public:
  /// Throws InvalidConfig if length < 1 or a non-centered window has an offset.
  WindowSpec(WindowKind kind, std::size_t length, std::int64_t offset = 0);

  static WindowSpec forward(std::size_t length) { return {WindowKind::Forward, length}; }
  static WindowSpec backward(std::size_t length) { return {WindowKind::Backward, length}; }
  static WindowSpec centered(std::size_t length, std::int64_t offset = 0) {
    return {WindowKind::Centered, length, offset};
  }

  WindowKind kind() const noexcept { return kind_; }
  std::size_t length() const noexcept { return length_; }
  std::int64_t offset() const noexcept { return offset_; }

  bool operator==(const WindowSpec&) const = default;

 private:
  WindowKind kind_;
  std::size_t length_;
  std::int64_t offset_;
};

/// Inclusive index range.
struct IndexRange {
  std::size_t lo;
  std::size_t hi;

  std::size_t size() const noexcept { return hi - lo + 1; }
  bool operator==(const IndexRange&) const = default;
};

/// Throws IndexOutOfRange unless t < series_length.
IndexRange window_bounds(const WindowSpec& spec, std::size_t t, std::size_t series_length);

struct WindowStats {
  double mean = 0.0;
  double variance = 0.0;  ///< population variance, kW^2
  double std_dev = 0.0;
  double minimum = 0.0;
  double maximum = 0.0;
  double median = 0.0;
  std::size_t sample_count = 0;
};

/// Direct evaluation over the given samples. Throws EmptyWindow.
WindowStats compute_window_stats(std::span<const double> values);

/// Relative-rise threshold theta (> 0) of the peak counter.
class PeakThreshold {
 public:
  /// Throws InvalidConfig unless theta is finite and > 0.
  explicit PeakThreshold(double theta = 1.0);
  double theta() const noexcept { return theta_; }
  bool operator==(const PeakThreshold&) const = default;

 private:
  double theta_;
};

/// Loads at or below this are treated as zero by the peak test.
inline constexpr double kZeroLoadEpsilon = 1e-9;

/// True if the step prev -> cur is a relative rise above theta. A
/// predecessor at or below kZeroLoadEpsilon counts as an infinite rise when
/// cur exceeds the epsilon, and as no rise otherwise.
inline bool is_peak_rise(double prev, double cur, double theta) noexcept {
  if (prev <= kZeroLoadEpsilon) {
    return cur > kZeroLoadEpsilon;
  }
  return (cur - prev) / prev > theta;
}

/// Number of consecutive in-window pairs whose relative rise exceeds theta.
/// Throws EmptyWindow.
std::size_t count_peaks(std::span<const double> values, PeakThreshold threshold);

/// Prefix sums of peak indicators over a whole series, answering
/// count_peaks for any inclusive window in O(1).
class PeakIndex {
 public:
  PeakIndex(std::span<const double> series, PeakThreshold threshold);

  /// Equal to count_peaks(series[range.lo .. range.hi]).
  std::size_t count(IndexRange range) const noexcept {
    return prefix_[range.hi] - prefix_[range.lo];
  }

 private:
  // prefix_[i] = number of rises at pair positions 1..i
  std::vector<std::uint32_t> prefix_;
};

}  // namespace evdetect
