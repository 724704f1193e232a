#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tagref/corpus.hpp"

namespace tagref {

// floor applied to every topic-word entry before row normalization
inline constexpr double kBetaFloor = 1e-8;

struct LdaModel {
  std::vector<double> alpha;  // K, all positive
  std::vector<double> beta;   // row-major K x V, rows sum to 1
  int num_topics = 0;
  int vocab_size = 0;
  std::uint64_t seed = 0;
  int em_iters_run = 0;
  bool converged = false;
  double final_elbo = 0.0;

  double beta_at(int k, int v) const {
    return beta[std::size_t(k) * vocab_size + v];
  }
  std::span<const double> beta_row(int k) const {
    return {beta.data() + std::size_t(k) * vocab_size, std::size_t(vocab_size)};
  }
};

struct VariationalParams {
  std::vector<double> gamma;  // K
  std::vector<double> phi;    // row-major N_d x K, rows on the simplex
  bool converged = false;
  int iters = 0;

  std::span<const double> phi_row(int n, int k_topics) const {
    return {phi.data() + std::size_t(n) * k_topics, std::size_t(k_topics)};
  }
};

// Coordinate-ascent updates of (phi, gamma) from gamma0 = alpha + N/K until
// the mean absolute gamma change drops below tol. Optionally records the
// bound after every sweep.
VariationalParams var_inference(const TagDocument& doc, const LdaModel& model,
                                double tol = 1e-6, int max_iters = 200,
                                std::vector<double>* sweep_elbo = nullptr);

// Evidence lower bound of the document under the variational posterior.
double elbo(const TagDocument& doc, const LdaModel& model,
            const VariationalParams& vp);

struct LdaFitOptions {
  int em_iters = 50;
  double em_tol = 1e-5;      // relative corpus-ELBO improvement
  double var_tol = 1e-6;
  int var_iters = 200;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Variational EM. The E-step warm-starts each document from its previous
// parameters so the corpus bound is monotone.
LdaModel fit_lda(const Corpus& corpus, int num_topics,
                 const LdaFitOptions& opts = {});

// p(w | W_d) over the whole vocabulary: beta^T E_q[theta]. Sums to 1.
std::vector<double> lda_tag_relevance(const LdaModel& model,
                                      const VariationalParams& vp);

// Maximum-likelihood Dirichlet update given expected log-theta statistics;
// shared by the EM M-step. suff_stats[i] = sum_d (psi(gamma_di) - psi(sum_j
// gamma_dj)); returns the updated alpha, clamped to [1e-4, 1e4].
std::vector<double> dirichlet_mle_newton(std::span<const double> alpha0,
                                         std::span<const double> suff_stats,
                                         int num_docs, int max_iters = 100);

}  // namespace tagref
