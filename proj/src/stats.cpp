#include "tagref/stats.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace tagref {

double digamma(double x) {
  assert(x > 0.0);
  double r = 0.0;
  while (x < 6.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  // asymptotic series through x^-12
  double series = f * (1.0 / 12.0 -
                  f * (1.0 / 120.0 -
                  f * (1.0 / 252.0 -
                  f * (1.0 / 240.0 -
                  f * (1.0 / 132.0 -
                  f * (691.0 / 32760.0))))));
  return r + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  assert(x > 0.0);
  double r = 0.0;
  while (x < 6.0) {
    r += 1.0 / (x * x);
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  double series = 1.0 +
                  1.0 / (2.0 * x) +
                  (1.0 / x) * (1.0 / 6.0 -
                  f * (1.0 / 30.0 -
                  f * (1.0 / 42.0 -
                  f * (1.0 / 30.0))));
  return r + series / x;
}

double inverse_digamma(double y) {
  double x = (y >= -2.22) ? std::exp(y) + 0.5 : -1.0 / (y + 0.5772156649015329);
  for (int it = 0; it < 8; ++it) {
    x -= (digamma(x) - y) / trigamma(x);
    x = std::max(x, 1e-300);
  }
  return x;
}

double log_sum_exp(std::span<const double> xs) {
  assert(!xs.empty());
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace tagref
