#include "evdetect/metrics.hpp"

#include <cmath>

#include "evdetect/random.hpp"

namespace evdetect {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

ConfusionCounts confusion(const ChargingLabelSeries& truth, const ChargingLabelSeries& predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "truth has " + std::to_string(truth.size()) +
                                               " labels, prediction has " +
                                               std::to_string(predicted.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] != 0;
    const bool guess = predicted[i] != 0;
    if (actual && guess) {
      ++c.tp;
    } else if (guess) {
      ++c.fp;
    } else if (actual) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& counts) {
  MetricsReport report;
  report.counts = counts;
  const auto tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) {
    report.precision = tp / static_cast<double>(counts.tp + counts.fp);
  }
  if (counts.tp + counts.fn > 0) {
    report.recall = tp / static_cast<double>(counts.tp + counts.fn);
  }
  if (report.precision && report.recall) {
    // Same value as 2PR/(P+R) with a single rounding, so it always lies
    // between P and R.
    report.f1 = 2.0 * tp / static_cast<double>(2 * counts.tp + counts.fp + counts.fn);
  }
  if (counts.total() > 0) {
    report.accuracy =
        static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  }
  return report;
}

double f1_from_precision_recall(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

SplitAssignment split_by_feeder(std::vector<std::string> feeder_ids, std::uint64_t seed,
                                std::array<double, 3> ratios) {
  const std::size_t total = feeder_ids.size();
  const auto part = [total](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) + 1e-9));
  };
  const std::size_t n_train = part(ratios[0]);
  const std::size_t n_validation = part(ratios[1]);
  if (n_train == 0 || n_validation == 0 || n_train + n_validation >= total) {
    throw Error(ErrorCode::InsufficientFeeders,
                std::to_string(total) + " feeders cannot fill train/validation/test");
  }
  Rng rng(mix_seed(seed, 0x5b17));
  rng.shuffle(feeder_ids);
  SplitAssignment split;
  const auto first = feeder_ids.begin();
  split.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(first + static_cast<std::ptrdiff_t>(n_train),
                          first + static_cast<std::ptrdiff_t>(n_train + n_validation));
  split.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_validation), feeder_ids.end());
  return split;
}

}  // namespace evdetect
