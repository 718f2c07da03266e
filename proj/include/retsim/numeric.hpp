#pragma once

#include <cstddef>

namespace retsim {

// Recursive pairwise summation; fixed association, so results are
// reproducible across runs and thread counts.
inline double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

// Kahan compensated accumulator for long score sums.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace retsim
