#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tagref/corpus.hpp"
#include "tagref/rng.hpp"

namespace tagref {

// clamps keeping the regularizer, log theta-bar and the Gaussian widths finite
inline constexpr double kRegularizerClamp = 1e-6;  // epsilon_r
inline constexpr double kThetaFloor = 1e-8;        // epsilon_theta
inline constexpr double kSigmaFloor = 1e-3;

struct RldaModel {
  std::vector<double> alpha;  // K
  std::vector<double> beta;   // row-major K x V, rows sum to 1
  int num_topics = 0;
  int vocab_size = 0;
  // two-Gaussian similarity likelihood; component 1 is "same content" and
  // mu1 > mu2 is maintained after every estimation step
  double mu1 = 0.8, mu2 = 0.2;
  double sigma1 = 0.2, sigma2 = 0.2;

  double beta_at(int k, int v) const {
    return beta[std::size_t(k) * vocab_size + v];
  }
};

struct RldaState {
  std::vector<std::vector<double>> theta_bar;  // per document, K simplex
  std::vector<std::vector<int>> z;             // per document, per token
  std::vector<int> tau;                        // per graph edge, 1 or 2
  std::uint64_t seed = 0;
  int iters_run = 0;
  bool converged = false;
  int ess_warnings = 0;
};

// Histogram intersection of two topic distributions, clamped away from
// {0, 1} so downstream log terms stay finite.
double topic_similarity(std::span<const double> theta_a,
                        std::span<const double> theta_b);

// Topic draw per token, mass proportional to theta_bar[i] * beta[i, w].
std::vector<int> sample_z(const TagDocument& doc,
                          std::span<const double> theta_bar,
                          const RldaModel& model, Rng& rng);

// P(tau = 1 | s) under the two-Gaussian likelihood, computed in log space.
double tau_posterior(double r1, double s, double mu1, double sigma1,
                     double mu2, double sigma2);

int sample_tau(std::span<const double> theta_bar_d,
               std::span<const double> theta_bar_e, double s,
               const RldaModel& model, Rng& rng);

// r1 * mu1 + (1 - r1) * mu2, the mean similarity implied by the mixture.
double expected_similarity(double r1, double mu1, double mu2);

struct NeighborLink {
  std::span<const double> theta_bar;
  int tau = 1;
  double s = 0.0;
};

struct ExpectedTheta {
  std::vector<double> theta;  // K simplex, entries >= kThetaFloor
  double ess = 0.0;           // effective sample size of the weights
};

// Self-normalized importance-sampling estimate of E(theta_d | rest) with
// Dirichlet(alpha) proposals. Weights combine the token likelihood with the
// relational-indicator likelihood of every neighbor.
ExpectedTheta expected_theta(std::span<const int> z_counts,
                             std::span<const NeighborLink> neighbors,
                             std::span<const double> alpha, int n_samples,
                             Rng& rng);

// Maximum-likelihood Dirichlet via the inverse-digamma fixed point.
std::vector<double> estimate_alpha(
    const std::vector<std::vector<double>>& theta_bars, double tol = 1e-8,
    int max_iters = 1000);

// beta[i][j] proportional to (kBetaFloor + count of tokens with z = i,
// word = j).
std::vector<double> estimate_beta(const std::vector<TagDocument>& docs,
                                  const std::vector<std::vector<int>>& z,
                                  int num_topics, int vocab_size);

struct GaussianPair {
  double mu1, sigma1, mu2, sigma2;
};

// Per-group sample mean / standard deviation of the similarities, with the
// component swap that keeps mu1 > mu2. Empty groups keep the previous
// parameters.
GaussianPair estimate_gaussians(std::span<const int> taus,
                                std::span<const double> similarities,
                                const GaussianPair& previous);

struct RldaFitOptions {
  int outer_iters = 30;
  int n_samples = 2000;
  double theta_tol = 1e-4;     // max per-document L1 change of theta-bar
  double ess_warn = 10.0;
  int gibbs_sweeps = 1;        // z/tau sweeps per outer iteration
  std::uint64_t seed = 0;
  int lda_em_iters = 50;       // initialization fit
  int threads = 1;
  // optional per-iteration snapshots of theta_bar, for diagnostics
  std::vector<std::vector<std::vector<double>>>* theta_trace = nullptr;
};

// Hybrid sampler: per iteration one z sweep, one tau sweep, a synchronous
// theta-bar sweep (neighbors read the previous iteration's values), then
// alpha/beta/Gaussian re-estimation. Initialized from a plain LDA fit.
std::pair<RldaModel, RldaState> fit_rlda(const Corpus& corpus, int num_topics,
                                         const RldaFitOptions& opts = {});

// p(w | everything) over the whole vocabulary: beta^T theta_bar. Sums to 1.
std::vector<double> rlda_tag_relevance(std::span<const double> theta_bar,
                                       const RldaModel& model);

}  // namespace tagref
