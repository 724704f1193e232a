#include "tagref/rng.hpp"

#include <cassert>
#include <cmath>

namespace tagref {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

double Rng::uniform01() {
  // 53 random mantissa bits
  return double(engine_() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform_pos() {
  double u;
  do {
    u = uniform01();
  } while (u <= 0.0);
  return u;
}

int Rng::uniform_int(int lo, int hi) {
  assert(lo <= hi);
  std::uint64_t span = std::uint64_t(hi) - std::uint64_t(lo) + 1;
  // rejection to avoid modulo bias
  std::uint64_t limit = ~0ULL - (~0ULL % span);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return lo + int(x % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

double Rng::gamma(double shape) {
  assert(shape > 0.0);
  if (shape < 1.0) {
    double u = uniform_pos();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void Rng::dirichlet(std::span<const double> alpha, std::vector<double>& out) {
  out.resize(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double g = gamma(alpha[i]);
    if (g <= 0.0) g = 1e-300;  // gamma underflow for tiny shapes
    out[i] = g;
    total += g;
  }
  for (double& x : out) x /= total;
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  assert(total > 0.0);
  double u = uniform01() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return int(i);
  }
  return int(weights.size()) - 1;
}

}  // namespace tagref
