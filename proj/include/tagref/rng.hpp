#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tagref {

// Mixes a master seed with up to three stream labels (splitmix64 finalizer).
// Used to derive independent per-entity streams so sampling phases can run
// in parallel without changing results.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

// mt19937_64 plus hand-rolled samplers. The standard <random> distributions
// are implementation-defined, so we roll our own to keep draws identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform01();
  // (0, 1)
  double uniform_pos();
  // integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi);
  // standard normal, polar Box-Muller with spare caching
  double normal();
  // Gamma(shape, 1), Marsaglia-Tsang; shape < 1 via the boost trick
  double gamma(double shape);
  // writes a Dirichlet(alpha) draw into out (resized to alpha.size())
  void dirichlet(std::span<const double> alpha, std::vector<double>& out);
  // index drawn with probability proportional to weights[i]; weights >= 0
  int categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tagref
