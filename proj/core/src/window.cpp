#include "evdetect/window.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "evdetect/error.hpp"

namespace evdetect {

std::string_view to_string(WindowKind kind) noexcept {
  switch (kind) {
    case WindowKind::Forward: return "forward";
    case WindowKind::Centered: return "centered";
    case WindowKind::Backward: return "backward";
  }
  return "unknown";
}

WindowSpec::WindowSpec(WindowKind kind, std::size_t length, std::int64_t offset)
    : kind_(kind), length_(length), offset_(offset) {
  if (length_ < 1) {
    throw Error(ErrorCode::InvalidConfig, "window length must be >= 1");
  }
  if (offset_ != 0 && kind_ != WindowKind::Centered) {
    throw Error(ErrorCode::InvalidConfig, "only centered windows take an offset");
  }
}

IndexRange window_bounds(const WindowSpec& spec, std::size_t t, std::size_t series_length) {
  if (t >= series_length) {
    throw Error(ErrorCode::IndexOutOfRange,
                "time index beyond series of length " + std::to_string(series_length), t);
  }
  const auto n = static_cast<std::int64_t>(spec.length());
  const auto ti = static_cast<std::int64_t>(t);
  const auto last = static_cast<std::int64_t>(series_length) - 1;
  std::int64_t lo = ti;
  std::int64_t hi = ti;
  switch (spec.kind()) {
    case WindowKind::Forward:
      hi = ti + n;
      break;
    case WindowKind::Backward:
      lo = ti - n;
      break;
    case WindowKind::Centered: {
      const std::int64_t half = (n + 1) / 2;
      lo = ti - half + spec.offset();
      hi = ti + half + spec.offset();
      break;
    }
  }
  lo = std::clamp<std::int64_t>(lo, 0, last);
  hi = std::clamp<std::int64_t>(hi, 0, last);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

WindowStats compute_window_stats(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyWindow, "cannot summarize an empty window");
  }
  const std::size_t count = values.size();
  const double count_d = static_cast<double>(count);

  // Shifting by the first sample keeps constant windows exact.
  const double shift = values.front();
  double sum = 0.0;
  double lo = values.front();
  double hi = values.front();
  for (double v : values) {
    sum += v - shift;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mean_shifted = sum / count_d;
  double sq = 0.0;
  for (double v : values) {
    const double d = (v - shift) - mean_shifted;
    sq += d * d;
  }

  WindowStats stats;
  stats.sample_count = count;
  stats.minimum = lo;
  stats.maximum = hi;
  stats.mean = std::clamp(shift + mean_shifted, lo, hi);
  stats.variance = lo == hi ? 0.0 : sq / count_d;
  stats.std_dev = std::sqrt(stats.variance);

  std::vector<double> scratch(values.begin(), values.end());
  const std::size_t mid = count / 2;
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid),
                   scratch.end());
  const double upper = scratch[mid];
  if (count % 2 == 1) {
    stats.median = upper;
  } else {
    const double lower =
        *std::max_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid));
    stats.median = std::midpoint(lower, upper);
  }
  return stats;
}

PeakThreshold::PeakThreshold(double theta) : theta_(theta) {
  if (!std::isfinite(theta_) || theta_ <= 0.0) {
    throw Error(ErrorCode::InvalidConfig, "peak threshold must be finite and > 0");
  }
}

std::size_t count_peaks(std::span<const double> values, PeakThreshold threshold) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyWindow, "cannot count peaks in an empty window");
  }
  std::size_t peaks = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (is_peak_rise(values[i - 1], values[i], threshold.theta())) {
      ++peaks;
    }
  }
  return peaks;
}

PeakIndex::PeakIndex(std::span<const double> series, PeakThreshold threshold)
    : prefix_(series.size(), 0) {
  for (std::size_t i = 1; i < series.size(); ++i) {
    prefix_[i] = prefix_[i - 1] +
                 (is_peak_rise(series[i - 1], series[i], threshold.theta()) ? 1u : 0u);
  }
}

}  // namespace evdetect
