#include "evdetect/series.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace evdetect {

std::optional<SeriesViolation> validate_load_series(std::span<const double> values) {
  if (values.empty()) {
    return SeriesViolation{ErrorCode::EmptySeries, 0};
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      return SeriesViolation{ErrorCode::NonFiniteValue, i};
    }
    if (values[i] < 0.0) {
      return SeriesViolation{ErrorCode::NegativeValue, i};
    }
  }
  return std::nullopt;
}

LoadSeries::LoadSeries(Timestamp start, Interval interval, std::vector<double> values)
    : start_(start), interval_(interval), values_(std::move(values)) {
  if (interval_.count() <= 0) {
    throw Error(ErrorCode::InvalidParams, "sampling interval must be positive");
  }
  if (auto violation = validate_load_series(values_)) {
    throw Error(violation->code, "invalid load series",
                violation->code == ErrorCode::EmptySeries
                    ? std::nullopt
                    : std::optional<std::size_t>(violation->index));
  }
}

ChargingLabelSeries::ChargingLabelSeries(std::vector<std::uint8_t> labels)
    : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 1) {
      throw Error(ErrorCode::NonBinaryLabels, "label must be 0 or 1", i);
    }
  }
}

std::size_t ChargingLabelSeries::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

HouseholdRecordSet::HouseholdRecordSet(std::string household_id, LoadSeries load,
                                       LoadSeries ev_load)
    : household_id_(std::move(household_id)),
      load_(std::move(load)),
      ev_load_(std::move(ev_load)) {
  if (load_.size() != ev_load_.size()) {
    throw Error(ErrorCode::LengthMismatch, "load and ev_load lengths differ");
  }
  if (load_.start() != ev_load_.start() || load_.interval() != ev_load_.interval()) {
    throw Error(ErrorCode::TimestampMismatch, "load and ev_load are not aligned");
  }
  std::vector<std::uint8_t> labels(load_.size());
  for (std::size_t t = 0; t < load_.size(); ++t) {
    if (ev_load_[t] > load_[t]) {
      throw Error(ErrorCode::InvalidParams, "ev load exceeds total load", t);
    }
    labels[t] = ev_load_[t] > 0.0 ? 1 : 0;
  }
  labels_ = ChargingLabelSeries(std::move(labels));
}

FeederRecordSet::FeederRecordSet(std::string feeder_id,
                                 std::vector<std::string> household_ids,
                                 LoadSeries load, ChargingLabelSeries labels)
    : feeder_id_(std::move(feeder_id)),
      household_ids_(std::move(household_ids)),
      load_(std::move(load)),
      labels_(std::move(labels)) {
  if (labels_.size() != load_.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels and load lengths differ");
  }
}

}  // namespace evdetect
