#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <set>

#include "evdetect/window.hpp"

namespace evdetect {

/// Incrementally maintained statistics over a contiguous run of samples
/// [begin, end) that only grows at the back and shrinks at the front.
///
/// - min/max: monotonic deques, O(1) amortized
/// - median: two balanced multisets, O(log n)
/// - mean/variance: sums of deviations from a reference shift; the sums are
///   rebuilt from the retained samples every `rebuild_period` pushes, and
///   sooner when the window has moved far from the shift, so that rounding
///   drift and cancellation stay bounded
/// - peak count: running count of in-window rises
///
/// Two accumulators fed the same operation sequence produce bit-identical
/// statistics.
class RollingAccumulator {
 public:
  RollingAccumulator(PeakThreshold threshold, std::size_t rebuild_period);

  bool empty() const noexcept { return count_ == 0; }
  std::size_t size() const noexcept { return count_; }
  std::uint64_t begin_index() const noexcept { return begin_; }
  std::uint64_t end_index() const noexcept { return begin_ + count_; }

  /// Appends the sample at index end_index().
  void push_back(double value);

  /// Removes the sample at begin_index(). `front_value` must be that sample
  /// and `next_value` the one after it (ignored when size() == 1).
  void pop_front(double front_value, double next_value);

  /// Drops everything and restarts at `begin`.
  void reset(std::uint64_t begin);

  /// Requires !empty().
  WindowStats stats() const;
  std::size_t peaks() const noexcept { return peaks_; }

 private:
  struct Entry {
    std::uint64_t index;
    double value;
  };

  void rebalance();
  void rebuild_sums();
  void recentre_if_ill_conditioned();

  double theta_;
  std::size_t rebuild_period_;

  std::uint64_t begin_ = 0;
  std::size_t count_ = 0;
  double back_value_ = 0.0;

  std::deque<Entry> min_queue_;
  std::deque<Entry> max_queue_;
  std::multiset<double> lower_;  // size == upper_.size() or upper_.size() + 1
  std::multiset<double> upper_;

  double shift_ = 0.0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  double flow_ = 0.0;  // squares added or removed since the last rebuild
  std::size_t pushes_since_rebuild_ = 0;

  std::size_t peaks_ = 0;
};

}  // namespace evdetect
