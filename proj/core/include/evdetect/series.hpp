#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evdetect/error.hpp"

namespace evdetect {

using Timestamp = std::chrono::sys_seconds;
using Interval = std::chrono::seconds;

inline constexpr Interval kMinuteInterval{60};

/// First invariant violation found by validate_load_series.
struct SeriesViolation {
  ErrorCode code;     ///< EmptySeries, NegativeValue or NonFiniteValue
  std::size_t index;  ///< offending sample (0 for EmptySeries)

  bool operator==(const SeriesViolation&) const = default;
};

/// Checks the load-series invariants: non-empty, every value finite and
/// non-negative. Returns the first violation in index order.
std::optional<SeriesViolation> validate_load_series(std::span<const double> values);

/// Uniformly sampled power sequence in kW.
class LoadSeries {
 public:
  /// Throws Error with the violation's code when the values are invalid, and
  /// InvalidParams for a non-positive interval.
  LoadSeries(Timestamp start, Interval interval, std::vector<double> values);

  Timestamp start() const noexcept { return start_; }
  Interval interval() const noexcept { return interval_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  Timestamp timestamp_at(std::size_t i) const noexcept {
    return start_ + interval_ * static_cast<std::int64_t>(i);
  }

  bool operator==(const LoadSeries&) const = default;

 private:
  Timestamp start_;
  Interval interval_;
  std::vector<double> values_;
};

/// Binary EV charging state per time step.
class ChargingLabelSeries {
 public:
  ChargingLabelSeries() = default;
  /// Throws NonBinaryLabels if an element is not 0 or 1.
  explicit ChargingLabelSeries(std::vector<std::uint8_t> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::uint8_t operator[](std::size_t i) const noexcept { return labels_[i]; }
  std::size_t positives() const noexcept;

  bool operator==(const ChargingLabelSeries&) const = default;

 private:
  std::vector<std::uint8_t> labels_;
};

/// Household total load with its hidden EV component. Labels are derived
/// from the EV load (ON iff ev_kw > 0) and never taken from the caller.
class HouseholdRecordSet {
 public:
  /// Throws LengthMismatch / TimestampMismatch when the two series are not
  /// aligned and InvalidParams when ev_load exceeds load at some step.
  HouseholdRecordSet(std::string household_id, LoadSeries load, LoadSeries ev_load);

  const std::string& household_id() const noexcept { return household_id_; }
  const LoadSeries& load() const noexcept { return load_; }
  const LoadSeries& ev_load() const noexcept { return ev_load_; }
  const ChargingLabelSeries& labels() const noexcept { return labels_; }

  bool operator==(const HouseholdRecordSet&) const = default;

 private:
  std::string household_id_;
  LoadSeries load_;
  LoadSeries ev_load_;
  ChargingLabelSeries labels_;
};

/// Aggregate feeder load and the OR of its member households' labels.
class FeederRecordSet {
 public:
  /// Throws LengthMismatch if labels and load differ in length.
  FeederRecordSet(std::string feeder_id, std::vector<std::string> household_ids,
                  LoadSeries load, ChargingLabelSeries labels);

  const std::string& feeder_id() const noexcept { return feeder_id_; }
  const std::vector<std::string>& household_ids() const noexcept { return household_ids_; }
  const LoadSeries& load() const noexcept { return load_; }
  const ChargingLabelSeries& labels() const noexcept { return labels_; }

  bool operator==(const FeederRecordSet&) const = default;

 private:
  std::string feeder_id_;
  std::vector<std::string> household_ids_;
  LoadSeries load_;
  ChargingLabelSeries labels_;
};

}  // namespace evdetect
