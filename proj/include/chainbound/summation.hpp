#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace chainbound {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct SampleMoments {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample mean and standard error of the mean (unbiased variance).
inline SampleMoments sample_moments(std::span<const double> xs) noexcept {
  SampleMoments m;
  if (xs.empty()) return m;
  CompensatedSum s;
  for (double x : xs) s += x;
  m.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  CompensatedSum sq;
  for (double x : xs) sq += (x - m.mean) * (x - m.mean);
  const double var = sq.value() / static_cast<double>(xs.size() - 1);
  m.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  return m;
}

}  // namespace chainbound
