#include "evdetect/rolling.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace evdetect {

namespace {

// Recentre once the squares that flowed through the shifted sums outweigh the
// centred second moment by this much; bounds the relative variance error near 1e-12.
constexpr double kMaxFlowRatio = 1e4;

}  // namespace

RollingAccumulator::RollingAccumulator(PeakThreshold threshold, std::size_t rebuild_period)
    : theta_(threshold.theta()), rebuild_period_(std::max<std::size_t>(rebuild_period, 1)) {}

void RollingAccumulator::push_back(double value) {
  const std::uint64_t index = begin_ + count_;
  if (count_ > 0 && is_peak_rise(back_value_, value, theta_)) {
    ++peaks_;
  }
  if (count_ == 0) {
    shift_ = value;
    sum_ = 0.0;
    sum_sq_ = 0.0;
    flow_ = 0.0;
    pushes_since_rebuild_ = 0;
  }

  while (!min_queue_.empty() && min_queue_.back().value > value) {
    min_queue_.pop_back();
  }
  min_queue_.push_back({index, value});
  while (!max_queue_.empty() && max_queue_.back().value < value) {
    max_queue_.pop_back();
  }
  max_queue_.push_back({index, value});

  if (lower_.empty() || value <= *lower_.rbegin()) {
    lower_.insert(value);
  } else {
    upper_.insert(value);
  }
  rebalance();

  const double d = value - shift_;
  sum_ += d;
  sum_sq_ += d * d;
  flow_ += d * d;

  back_value_ = value;
  ++count_;
  if (++pushes_since_rebuild_ >= rebuild_period_) {
    rebuild_sums();
  } else {
    recentre_if_ill_conditioned();
  }
}

void RollingAccumulator::pop_front(double front_value, double next_value) {
  assert(count_ > 0);
  if (count_ > 1 && is_peak_rise(front_value, next_value, theta_)) {
    --peaks_;
  }
  if (min_queue_.front().index == begin_) {
    min_queue_.pop_front();
  }
  if (max_queue_.front().index == begin_) {
    max_queue_.pop_front();
  }

  if (front_value <= *lower_.rbegin()) {
    lower_.erase(lower_.find(front_value));
  } else {
    upper_.erase(upper_.find(front_value));
  }
  rebalance();

  const double d = front_value - shift_;
  sum_ -= d;
  sum_sq_ -= d * d;
  flow_ += d * d;

  ++begin_;
  --count_;
  if (count_ == 0) {
    reset(begin_);
  } else {
    recentre_if_ill_conditioned();
  }
}

void RollingAccumulator::reset(std::uint64_t begin) {
  begin_ = begin;
  count_ = 0;
  back_value_ = 0.0;
  min_queue_.clear();
  max_queue_.clear();
  lower_.clear();
  upper_.clear();
  shift_ = sum_ = sum_sq_ = flow_ = 0.0;
  pushes_since_rebuild_ = 0;
  peaks_ = 0;
}

void RollingAccumulator::rebalance() {
  if (lower_.size() > upper_.size() + 1) {
    auto it = std::prev(lower_.end());
    upper_.insert(*it);
    lower_.erase(it);
  } else if (upper_.size() > lower_.size()) {
    auto it = upper_.begin();
    lower_.insert(*it);
    upper_.erase(it);
  }
}

void RollingAccumulator::rebuild_sums() {
  // Re-centre on the current mean, then resum exactly what is retained.
  double raw = 0.0;
  for (double v : lower_) raw += v - shift_;
  for (double v : upper_) raw += v - shift_;
  shift_ += raw / static_cast<double>(count_);
  sum_ = 0.0;
  sum_sq_ = 0.0;
  for (double v : lower_) {
    const double d = v - shift_;
    sum_ += d;
    sum_sq_ += d * d;
  }
  for (double v : upper_) {
    const double d = v - shift_;
    sum_ += d;
    sum_sq_ += d * d;
  }
  flow_ = sum_sq_;
  pushes_since_rebuild_ = 0;
}

void RollingAccumulator::recentre_if_ill_conditioned() {
  // A constant window is reported exactly without the sums.
  if (min_queue_.front().value == max_queue_.front().value) {
    return;
  }
  const double centred = sum_sq_ - sum_ * (sum_ / static_cast<double>(count_));
  if (flow_ > kMaxFlowRatio * centred) {
    rebuild_sums();
  }
}

WindowStats RollingAccumulator::stats() const {
  assert(count_ > 0);
  WindowStats s;
  s.sample_count = count_;
  s.minimum = min_queue_.front().value;
  s.maximum = max_queue_.front().value;
  if (lower_.size() > upper_.size()) {
    s.median = *lower_.rbegin();
  } else {
    s.median = std::midpoint(*lower_.rbegin(), *upper_.begin());
  }
  if (s.minimum == s.maximum) {
    s.mean = s.minimum;
    s.variance = 0.0;
  } else {
    const double n = static_cast<double>(count_);
    const double mean_shifted = sum_ / n;
    s.mean = std::clamp(shift_ + mean_shifted, s.minimum, s.maximum);
    s.variance = std::max(0.0, sum_sq_ / n - mean_shifted * mean_shifted);
  }
  s.std_dev = std::sqrt(s.variance);
  return s;
}

}  // namespace evdetect
