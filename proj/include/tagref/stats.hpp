#pragma once

#include <span>

namespace tagref {

// psi(x) for x > 0, accurate to ~1e-13 down to x = 1e-6
double digamma(double x);

// psi'(x) for x > 0
double trigamma(double x);

// x with digamma(x) = y, Newton refinement on Minka's initializer
double inverse_digamma(double y);

double log_sum_exp(std::span<const double> xs);

}  // namespace tagref
