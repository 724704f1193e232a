#include "tagref/rlda.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

#include "tagref/error.hpp"
#include "tagref/lda.hpp"
#include "tagref/stats.hpp"
#include "tagref/util.hpp"

namespace tagref {

namespace {

// stream labels for per-entity derived seeds
enum Phase : std::uint64_t { kPhaseZ = 1, kPhaseTau = 2, kPhaseTheta = 3 };

void check_simplex(std::span<const double> theta) {
  double sum = 0.0;
  for (double t : theta) {
    if (t < 0.0) throw DataError("topic distribution has negative entries");
    sum += t;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw DataError("topic distribution does not sum to 1");
}

double log_gauss(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
}

}  // namespace

double topic_similarity(std::span<const double> theta_a,
                        std::span<const double> theta_b) {
  if (theta_a.size() != theta_b.size())
    throw DataError("topic distribution dimension mismatch");
  check_simplex(theta_a);
  check_simplex(theta_b);
  double hi = 0.0;
  for (std::size_t k = 0; k < theta_a.size(); ++k)
    hi += std::min(theta_a[k], theta_b[k]);
  return std::clamp(hi, kRegularizerClamp, 1.0 - kRegularizerClamp);
}

std::vector<int> sample_z(const TagDocument& doc,
                          std::span<const double> theta_bar,
                          const RldaModel& model, Rng& rng) {
  const int k = model.num_topics;
  std::vector<int> assignment(doc.tags.size());
  std::vector<double> mass(k);
  for (std::size_t t = 0; t < doc.tags.size(); ++t) {
    for (int i = 0; i < k; ++i)
      mass[i] = theta_bar[i] * model.beta_at(i, doc.tags[t]);
    assignment[t] = rng.categorical(mass);
  }
  return assignment;
}

double tau_posterior(double r1, double s, double mu1, double sigma1,
                     double mu2, double sigma2) {
  sigma1 = std::max(sigma1, kSigmaFloor);
  sigma2 = std::max(sigma2, kSigmaFloor);
  double log1 = std::log(r1) + log_gauss(s, mu1, sigma1);
  double log2 = std::log(1.0 - r1) + log_gauss(s, mu2, sigma2);
  // 1 / (1 + exp(log2 - log1))
  double diff = log2 - log1;
  if (diff > 700.0) return std::exp(-diff);
  return 1.0 / (1.0 + std::exp(diff));
}

int sample_tau(std::span<const double> theta_bar_d,
               std::span<const double> theta_bar_e, double s,
               const RldaModel& model, Rng& rng) {
  double r1 = topic_similarity(theta_bar_d, theta_bar_e);
  double p1 = tau_posterior(r1, s, model.mu1, model.sigma1, model.mu2,
                            model.sigma2);
  return rng.uniform01() < p1 ? 1 : 2;
}

double expected_similarity(double r1, double mu1, double mu2) {
  return r1 * mu1 + (1.0 - r1) * mu2;
}

ExpectedTheta expected_theta(std::span<const int> z_counts,
                             std::span<const NeighborLink> neighbors,
                             std::span<const double> alpha, int n_samples,
                             Rng& rng) {
  if (n_samples < 1) throw UsageError("n_samples must be positive");
  const int k = int(alpha.size());

  std::vector<std::vector<double>> draws(n_samples);
  std::vector<double> log_w(n_samples);
  std::vector<double> theta;
  for (int i = 0; i < n_samples; ++i) {
    rng.dirichlet(alpha, theta);
    double lw = 0.0;
    for (int j = 0; j < k; ++j) {
      if (z_counts[j] == 0) continue;
      lw += double(z_counts[j]) * std::log(std::max(theta[j], 1e-300));
    }
    for (const auto& nb : neighbors) {
      double hi = 0.0;
      for (int j = 0; j < k; ++j) hi += std::min(theta[j], nb.theta_bar[j]);
      double r1 = std::clamp(hi, kRegularizerClamp, 1.0 - kRegularizerClamp);
      lw += std::log(nb.tau == 1 ? r1 : 1.0 - r1);
    }
    log_w[i] = lw;
    draws[i] = theta;
  }

  double max_lw = *std::max_element(log_w.begin(), log_w.end());
  double w_sum = 0.0, w2_sum = 0.0;
  ExpectedTheta out;
  out.theta.assign(k, 0.0);
  for (int i = 0; i < n_samples; ++i) {
    double w = std::exp(log_w[i] - max_lw);
    w_sum += w;
    w2_sum += w * w;
    for (int j = 0; j < k; ++j) out.theta[j] += w * draws[i][j];
  }
  for (int j = 0; j < k; ++j) out.theta[j] /= w_sum;
  out.ess = w_sum * w_sum / w2_sum;

  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    out.theta[j] = std::max(out.theta[j], kThetaFloor);
    total += out.theta[j];
  }
  for (int j = 0; j < k; ++j) out.theta[j] /= total;
  return out;
}

std::vector<double> estimate_alpha(
    const std::vector<std::vector<double>>& theta_bars, double tol,
    int max_iters) {
  if (theta_bars.size() < 2)
    throw DataError("alpha estimation needs at least two distributions");
  const int k = int(theta_bars[0].size());
  const double m = double(theta_bars.size());

  std::vector<double> mean_log(k, 0.0);
  for (const auto& theta : theta_bars) {
    if (int(theta.size()) != k)
      throw DataError("topic distribution dimension mismatch");
    for (int j = 0; j < k; ++j)
      mean_log[j] += std::log(std::max(theta[j], kThetaFloor));
  }
  for (int j = 0; j < k; ++j) mean_log[j] /= m;

  std::vector<double> alpha(k, 1.0), next(k);
  for (int it = 0; it < max_iters; ++it) {
    double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double psi_total = digamma(total);
    double change = 0.0;
    for (int j = 0; j < k; ++j) {
      next[j] = std::clamp(inverse_digamma(psi_total + mean_log[j]), 1e-4, 1e4);
      change = std::max(change, std::fabs(next[j] - alpha[j]));
    }
    alpha.swap(next);
    if (change < tol) return alpha;
  }
  throw ConvergenceError("alpha estimation did not converge", {alpha});
}

std::vector<double> estimate_beta(const std::vector<TagDocument>& docs,
                                  const std::vector<std::vector<int>>& z,
                                  int num_topics, int vocab_size) {
  if (z.size() != docs.size())
    throw DataError("topic assignments do not cover the corpus");
  std::vector<double> beta(std::size_t(num_topics) * vocab_size, kBetaFloor);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (z[d].size() != docs[d].tags.size())
      throw DataError("topic assignments do not cover document " +
                      docs[d].image_id);
    for (std::size_t t = 0; t < z[d].size(); ++t)
      beta[std::size_t(z[d][t]) * vocab_size + docs[d].tags[t]] += 1.0;
  }
  for (int i = 0; i < num_topics; ++i) {
    double total =
        std::accumulate(beta.begin() + std::size_t(i) * vocab_size,
                        beta.begin() + std::size_t(i + 1) * vocab_size, 0.0);
    for (int j = 0; j < vocab_size; ++j)
      beta[std::size_t(i) * vocab_size + j] /= total;
  }
  return beta;
}

GaussianPair estimate_gaussians(std::span<const int> taus,
                                std::span<const double> similarities,
                                const GaussianPair& previous) {
  if (taus.empty()) throw DataError("no edges to estimate Gaussians from");
  if (taus.size() != similarities.size())
    throw DataError("tau/similarity length mismatch");

  GaussianPair out = previous;
  for (int group = 1; group <= 2; ++group) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t e = 0; e < taus.size(); ++e) {
      if (taus[e] != group) continue;
      sum += similarities[e];
      ++n;
    }
    if (n == 0) continue;
    double mean = sum / double(n);
    double var = 0.0;
    for (std::size_t e = 0; e < taus.size(); ++e) {
      if (taus[e] != group) continue;
      double diff = similarities[e] - mean;
      var += diff * diff;
    }
    double sd = n > 1 ? std::sqrt(var / double(n - 1)) : 0.0;
    sd = std::max(sd, kSigmaFloor);
    if (group == 1) {
      out.mu1 = mean;
      out.sigma1 = sd;
    } else {
      out.mu2 = mean;
      out.sigma2 = sd;
    }
  }
  if (out.mu1 <= out.mu2) {
    std::swap(out.mu1, out.mu2);
    std::swap(out.sigma1, out.sigma2);
  }
  return out;
}

std::pair<RldaModel, RldaState> fit_rlda(const Corpus& corpus, int num_topics,
                                         const RldaFitOptions& opts) {
  if (num_topics < 1) throw UsageError("topic count must be positive");
  if (!corpus.graph) throw DataError("rLDA requires a similarity graph");
  const int k = num_topics;
  const int m = corpus.num_documents();
  const auto& edges = corpus.graph->edges();

  // seed theta-bar with a plain LDA fit
  LdaFitOptions lda_opts;
  lda_opts.seed = opts.seed;
  lda_opts.em_iters = opts.lda_em_iters;
  lda_opts.threads = opts.threads;
  LdaModel lda = fit_lda(corpus, k, lda_opts);

  RldaModel model;
  model.num_topics = k;
  model.vocab_size = corpus.vocabulary.size();
  model.alpha = lda.alpha;
  model.beta = lda.beta;

  RldaState state;
  state.seed = opts.seed;
  state.theta_bar.assign(m, std::vector<double>(k, 1.0 / double(k)));
  state.z.assign(m, {});
  state.tau.assign(edges.size(), 1);

  parallel_for(m, opts.threads, [&](int d) {
    const auto& doc = corpus.documents[d];
    if (doc.tags.empty()) return;  // prior mean stays for empty documents
    auto vp = var_inference(doc, lda);
    double total = std::accumulate(vp.gamma.begin(), vp.gamma.end(), 0.0);
    for (int i = 0; i < k; ++i) state.theta_bar[d][i] = vp.gamma[i] / total;
  });

  std::vector<double> edge_sims(edges.size());
  std::vector<std::vector<std::pair<int, int>>> incident(m);  // (neighbor, edge)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edge_sims[e] = edges[e].s;
    incident[edges[e].a].emplace_back(edges[e].b, int(e));
    incident[edges[e].b].emplace_back(edges[e].a, int(e));
  }

  std::vector<std::vector<double>> prev_theta;
  std::vector<std::vector<int>> z_counts(m, std::vector<int>(k, 0));

  for (int iter = 0; iter < opts.outer_iters; ++iter) {
    for (int sweep = 0; sweep < opts.gibbs_sweeps; ++sweep) {
      parallel_for(m, opts.threads, [&](int d) {
        const auto& doc = corpus.documents[d];
        if (doc.tags.empty()) return;
        Rng rng(mix_seed(opts.seed, kPhaseZ, std::uint64_t(iter) * opts.gibbs_sweeps + sweep,
                         std::uint64_t(d)));
        state.z[d] = sample_z(doc, state.theta_bar[d], model, rng);
      });
      parallel_for(int(edges.size()), opts.threads, [&](int e) {
        Rng rng(mix_seed(opts.seed, kPhaseTau, std::uint64_t(iter) * opts.gibbs_sweeps + sweep,
                         std::uint64_t(e)));
        state.tau[e] = sample_tau(state.theta_bar[edges[e].a],
                                  state.theta_bar[edges[e].b], edges[e].s,
                                  model, rng);
      });
    }

    for (int d = 0; d < m; ++d) {
      std::fill(z_counts[d].begin(), z_counts[d].end(), 0);
      for (int topic : state.z[d]) ++z_counts[d][topic];
    }

    // synchronous sweep: neighbors read the previous iteration's theta-bar
    prev_theta = state.theta_bar;
    std::vector<int> warnings(m, 0);
    parallel_for(m, opts.threads, [&](int d) {
      std::vector<NeighborLink> links;
      links.reserve(incident[d].size());
      for (const auto& [nb, e] : incident[d])
        links.push_back({prev_theta[nb], state.tau[e], edges[e].s});
      Rng rng(mix_seed(opts.seed, kPhaseTheta, std::uint64_t(iter),
                       std::uint64_t(d)));
      auto est = expected_theta(z_counts[d], links, model.alpha,
                                opts.n_samples, rng);
      state.theta_bar[d] = std::move(est.theta);
      if (est.ess < opts.ess_warn) warnings[d] = 1;
    });
    state.ess_warnings += std::accumulate(warnings.begin(), warnings.end(), 0);

    model.alpha = estimate_alpha(state.theta_bar);
    model.beta = estimate_beta(corpus.documents, state.z, k, model.vocab_size);
    if (!edges.empty()) {
      GaussianPair g = estimate_gaussians(
          state.tau, edge_sims,
          {model.mu1, model.sigma1, model.mu2, model.sigma2});
      model.mu1 = g.mu1;
      model.sigma1 = g.sigma1;
      model.mu2 = g.mu2;
      model.sigma2 = g.sigma2;
    }

    state.iters_run = iter + 1;
    if (opts.theta_trace) opts.theta_trace->push_back(state.theta_bar);

    double max_change = 0.0;
    for (int d = 0; d < m; ++d) {
      double change = 0.0;
      for (int i = 0; i < k; ++i)
        change += std::fabs(state.theta_bar[d][i] - prev_theta[d][i]);
      max_change = std::max(max_change, change);
    }
    if (max_change < opts.theta_tol) {
      state.converged = true;
      break;
    }
  }
  return {std::move(model), std::move(state)};
}

std::vector<double> rlda_tag_relevance(std::span<const double> theta_bar,
                                       const RldaModel& model) {
  const int k = model.num_topics;
  const int v = model.vocab_size;
  std::vector<double> scores(v, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < v; ++j) scores[j] += theta_bar[i] * model.beta_at(i, j);
  return scores;
}

}  // namespace tagref
