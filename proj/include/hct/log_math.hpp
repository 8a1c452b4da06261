#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace hct {

// Log-domain weight. -inf encodes a zero potential or probability.
using LogWeight = double;

inline constexpr LogWeight kLogZero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(LogWeight v) { return v == kLogZero; }

// Streaming log-sum-exp with a running max shift.
class LogSumAccumulator {
 public:
  void add(LogWeight v) {
    if (v == kLogZero) return;
    if (max_ == kLogZero) {
      max_ = v;
      sum_ = 1.0;
    } else if (v > max_) {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    } else {
      sum_ += std::exp(v - max_);
    }
  }

  LogWeight value() const {
    return max_ == kLogZero ? kLogZero : max_ + std::log(sum_);
  }

 private:
  LogWeight max_ = kLogZero;
  double sum_ = 0.0;
};

inline LogWeight log_sum_exp(std::span<const LogWeight> values) {
  if (values.empty()) return kLogZero;
  const LogWeight m = *std::max_element(values.begin(), values.end());
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (LogWeight v : values) s += std::exp(v - m);
  return m + std::log(s);
}

inline LogWeight log_add(LogWeight a, LogWeight b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const LogWeight m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace hct
