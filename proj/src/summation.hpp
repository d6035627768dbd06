#pragma once

#include <cmath>
#include <limits>

namespace cascadelab::detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void scale(double factor) noexcept {
    sum_ *= factor;
    comp_ *= factor;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Streaming ln(sum exp(x_i)) that rescales when a new maximum arrives.
class LogSumAccumulator {
 public:
  void add(double x) noexcept {
    if (x == -std::numeric_limits<double>::infinity()) return;
    if (x > max_) {
      if (max_ != -std::numeric_limits<double>::infinity()) sum_.scale(std::exp(max_ - x));
      max_ = x;
      sum_.add(1.0);
    } else {
      sum_.add(std::exp(x - max_));
    }
  }
  double value() const noexcept {
    if (max_ == -std::numeric_limits<double>::infinity()) return max_;
    return max_ + std::log(sum_.value());
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  CompensatedSum sum_;
};

}  // namespace cascadelab::detail
