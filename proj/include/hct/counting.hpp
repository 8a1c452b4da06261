#pragma once

#include <cstdint>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace hct {

using BigUint = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// Number of rooted binary hierarchies on k leaves: (2k-3)!!, with k=1 -> 1.
inline BigUint hierarchy_count(int k) {
  if (k < 1) throw std::domain_error("hierarchy_count: k must be positive");
  BigUint r = 1;
  for (int odd = 3; odd <= 2 * k - 3; odd += 2) r *= odd;
  return r;
}

// Split terms the pivot recursion evaluates on the full trellis over n leaves:
// sum over clusters of size k >= 2 of (2^(k-1) - 1), i.e. (3^n + 1)/2 - 2^n.
inline std::uint64_t full_trellis_split_terms(int n) {
  if (n < 1 || n > 39) throw std::domain_error("full_trellis_split_terms: n out of range");
  std::uint64_t pow3 = 1;
  for (int i = 0; i < n; ++i) pow3 *= 3;
  return (pow3 + 1) / 2 - (std::uint64_t{1} << n);
}

}  // namespace hct
