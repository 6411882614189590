#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace gibbsgap {

// Running mean and variance of weights exp(log_w) kept relative to the largest
// log-weight seen so far. Weights spanning hundreds of orders of magnitude are
// combined without overflow; merging follows Chan et al.'s pairwise update.
class WeightAccumulator {
 public:
  void add(double log_w) {
    if (count_ == 0) {
      max_log_ = log_w;
      count_ = 1;
      mean_ = 1.0;
      m2_ = 0.0;
      return;
    }
    if (log_w > max_log_) rescale(log_w);
    const double x = std::exp(log_w - max_log_);
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const WeightAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    WeightAccumulator rhs = other;
    if (rhs.max_log_ > max_log_) {
      rescale(rhs.max_log_);
    } else {
      rhs.rescale(max_log_);
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(rhs.count_);
    const double n = na + nb;
    const double delta = rhs.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += rhs.m2_ + delta * delta * na * nb / n;
    count_ += rhs.count_;
  }

  std::size_t count() const { return count_; }
  double max_log_weight() const { return max_log_; }

  double log_mean() const {
    return count_ == 0 ? -std::numeric_limits<double>::infinity() : max_log_ + std::log(mean_);
  }
  double mean() const { return std::exp(log_mean()); }

  // Log of the unbiased sample variance; -inf when all weights are equal.
  double log_variance() const {
    if (count_ < 2) return -std::numeric_limits<double>::infinity();
    const double scaled = m2_ / static_cast<double>(count_ - 1);
    return scaled <= 0.0 ? -std::numeric_limits<double>::infinity()
                         : 2.0 * max_log_ + std::log(scaled);
  }
  double variance() const { return std::exp(log_variance()); }

  // Standard error of the mean weight, sqrt(variance / count).
  double standard_error() const {
    if (count_ == 0) return 0.0;
    return std::exp(0.5 * (log_variance() - std::log(static_cast<double>(count_))));
  }

  // Share of the total weight carried by the single largest weight.
  double max_share() const {
    return count_ == 0 ? 0.0 : 1.0 / (static_cast<double>(count_) * mean_);
  }

 private:
  void rescale(double new_max) {
    const double f = std::exp(max_log_ - new_max);
    mean_ *= f;
    m2_ *= f * f;
    max_log_ = new_max;
  }

  std::size_t count_ = 0;
  double max_log_ = -std::numeric_limits<double>::infinity();
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace gibbsgap
