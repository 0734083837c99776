#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evdetect/series.hpp"

namespace evdetect {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& other) noexcept;
  bool operator==(const ConfusionCounts&) const = default;
};

/// Per-time-step 2x2 tally. Throws LengthMismatch.
ConfusionCounts confusion(const ChargingLabelSeries& truth, const ChargingLabelSeries& predicted);

/// Metrics with zero denominators left undefined (std::nullopt):
///   precision = tp / (tp + fp)
///   recall    = tp / (tp + fn)
///   f1        = 2PR / (P + R), evaluated as 2tp / (2tp + fp + fn); undefined
///               unless both precision and recall are defined
///   accuracy  = (tp + tn) / total
struct MetricsReport {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;
  ConfusionCounts counts;
};

MetricsReport metrics(const ConfusionCounts& counts);

/// Harmonic mean of a precision/recall pair; 0 when both are 0.
double f1_from_precision_recall(double precision, double recall);

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

inline constexpr std::array<double, 3> kDefaultSplitRatios{0.75, 0.15, 0.10};

/// Shuffles the ids with `seed`, then takes floor(r0 * F) for training,
/// floor(r1 * F) for validation and the remainder for testing.
/// Throws InsufficientFeeders if any part would be empty.
SplitAssignment split_by_feeder(std::vector<std::string> feeder_ids, std::uint64_t seed,
                                std::array<double, 3> ratios = kDefaultSplitRatios);

}  // namespace evdetect
