#include "tagref/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tagref/error.hpp"
#include "tagref/rng.hpp"
#include "tagref/stats.hpp"
#include "tagref/util.hpp"

namespace tagref {

namespace {

constexpr double kAlphaMin = 1e-4;
constexpr double kAlphaMax = 1e4;

void validate_model(const LdaModel& model) {
  if (model.num_topics < 1 || model.vocab_size < 1)
    throw DataError("invalid model dimensions");
  for (double a : model.alpha)
    if (!(a > 0.0)) throw DataError("alpha entries must be positive");
}

// one full sweep: refresh every phi row from gamma, then gamma from phi
void sweep(const TagDocument& doc, const LdaModel& model,
           std::vector<double>& gamma, std::vector<double>& phi) {
  const int k = model.num_topics;
  const int n = int(doc.tags.size());
  double gamma_sum = std::accumulate(gamma.begin(), gamma.end(), 0.0);
  double psi_sum = digamma(gamma_sum);

  std::vector<double> expected_log(k);
  for (int i = 0; i < k; ++i) expected_log[i] = digamma(gamma[i]) - psi_sum;

  for (int t = 0; t < n; ++t) {
    double* row = phi.data() + std::size_t(t) * k;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      row[i] = std::log(model.beta_at(i, doc.tags[t])) + expected_log[i];
      best = std::max(best, row[i]);
    }
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      row[i] = std::exp(row[i] - best);
      total += row[i];
    }
    for (int i = 0; i < k; ++i) row[i] /= total;
  }

  for (int i = 0; i < k; ++i) {
    double acc = model.alpha[i];
    for (int t = 0; t < n; ++t) acc += phi[std::size_t(t) * k + i];
    gamma[i] = acc;
  }
}

double elbo_impl(const TagDocument& doc, const LdaModel& model,
                 std::span<const double> gamma, std::span<const double> phi) {
  const int k = model.num_topics;
  const int n = int(doc.tags.size());
  double alpha_sum = std::accumulate(model.alpha.begin(), model.alpha.end(), 0.0);
  double gamma_sum = std::accumulate(gamma.begin(), gamma.end(), 0.0);
  double psi_sum = digamma(gamma_sum);

  double bound = std::lgamma(alpha_sum) - std::lgamma(gamma_sum);
  for (int i = 0; i < k; ++i) {
    double elog = digamma(gamma[i]) - psi_sum;
    bound -= std::lgamma(model.alpha[i]);
    bound += (model.alpha[i] - 1.0) * elog;
    bound += std::lgamma(gamma[i]);
    bound -= (gamma[i] - 1.0) * elog;
    for (int t = 0; t < n; ++t) {
      double p = phi[std::size_t(t) * k + i];
      if (p <= 0.0) continue;
      bound += p * (elog + std::log(model.beta_at(i, doc.tags[t])) - std::log(p));
    }
  }
  return bound;
}

}  // namespace

VariationalParams var_inference(const TagDocument& doc, const LdaModel& model,
                                double tol, int max_iters,
                                std::vector<double>* sweep_elbo) {
  validate_model(model);
  const int k = model.num_topics;
  const int n = int(doc.tags.size());
  if (n < 1) throw DataError("empty document: " + doc.image_id);

  VariationalParams vp;
  vp.gamma.assign(k, 0.0);
  for (int i = 0; i < k; ++i)
    vp.gamma[i] = model.alpha[i] + double(n) / double(k);
  vp.phi.assign(std::size_t(n) * k, 1.0 / double(k));
  if (sweep_elbo) sweep_elbo->clear();

  std::vector<double> prev(k);
  for (int it = 0; it < max_iters; ++it) {
    prev = vp.gamma;
    sweep(doc, model, vp.gamma, vp.phi);
    if (sweep_elbo) sweep_elbo->push_back(elbo_impl(doc, model, vp.gamma, vp.phi));
    double change = 0.0;
    for (int i = 0; i < k; ++i) change += std::fabs(vp.gamma[i] - prev[i]);
    vp.iters = it + 1;
    if (change / double(k) < tol) {
      vp.converged = true;
      break;
    }
  }
  return vp;
}

double elbo(const TagDocument& doc, const LdaModel& model,
            const VariationalParams& vp) {
  return elbo_impl(doc, model, vp.gamma, vp.phi);
}

std::vector<double> dirichlet_mle_newton(std::span<const double> alpha0,
                                         std::span<const double> suff_stats,
                                         int num_docs, int max_iters) {
  const int k = int(alpha0.size());
  const double m = double(num_docs);
  std::vector<double> alpha(alpha0.begin(), alpha0.end());

  auto objective = [&](const std::vector<double>& a) {
    double total = std::accumulate(a.begin(), a.end(), 0.0);
    double f = m * std::lgamma(total);
    for (int i = 0; i < k; ++i)
      f += -m * std::lgamma(a[i]) + (a[i] - 1.0) * suff_stats[i];
    return f;
  };

  double f_cur = objective(alpha);
  std::vector<double> grad(k), step(k), trial(k);
  for (int it = 0; it < max_iters; ++it) {
    double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double psi_total = digamma(total);
    double grad_norm = 0.0;
    for (int i = 0; i < k; ++i) {
      grad[i] = m * (psi_total - digamma(alpha[i])) + suff_stats[i];
      grad_norm = std::max(grad_norm, std::fabs(grad[i]));
    }
    if (grad_norm < 1e-10) break;

    // Newton direction for H = diag(q) + z 11^T (Sherman-Morrison)
    double z = m * trigamma(total);
    double gq = 0.0, iq = 0.0;
    std::vector<double> q(k);
    for (int i = 0; i < k; ++i) {
      q[i] = -m * trigamma(alpha[i]);
      gq += grad[i] / q[i];
      iq += 1.0 / q[i];
    }
    double b = gq / (1.0 / z + iq);
    for (int i = 0; i < k; ++i) step[i] = (grad[i] - b) / q[i];

    // backtrack until the step is feasible and does not decrease the
    // objective, so the surrounding EM stays monotone
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      bool feasible = true;
      for (int i = 0; i < k; ++i) {
        trial[i] = alpha[i] - scale * step[i];
        if (!(trial[i] > 0.0)) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        double f_try = objective(trial);
        if (f_try >= f_cur - 1e-12) {
          alpha = trial;
          f_cur = f_try;
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  for (double& a : alpha) a = std::clamp(a, kAlphaMin, kAlphaMax);
  return alpha;
}

LdaModel fit_lda(const Corpus& corpus, int num_topics,
                 const LdaFitOptions& opts) {
  if (num_topics < 1) throw UsageError("topic count must be positive");
  if (corpus.documents.empty()) throw DataError("empty corpus");
  const int k = num_topics;
  const int v = corpus.vocabulary.size();
  if (k > v)
    std::fprintf(stderr, "warning: more topics (%d) than vocabulary words (%d)\n",
                 k, v);

  LdaModel model;
  model.num_topics = k;
  model.vocab_size = v;
  model.seed = opts.seed;
  model.alpha.assign(k, 1.0);
  model.beta.assign(std::size_t(k) * v, 0.0);

  // beta rows drawn from a symmetric Dirichlet(1)
  Rng rng(mix_seed(opts.seed, 0x1da));
  std::vector<double> ones(v, 1.0), row;
  for (int i = 0; i < k; ++i) {
    rng.dirichlet(ones, row);
    for (int j = 0; j < v; ++j)
      model.beta[std::size_t(i) * v + j] = std::max(row[j], kBetaFloor);
    double total = std::accumulate(model.beta.begin() + std::size_t(i) * v,
                                   model.beta.begin() + std::size_t(i + 1) * v, 0.0);
    for (int j = 0; j < v; ++j) model.beta[std::size_t(i) * v + j] /= total;
  }

  const int m = corpus.num_documents();
  std::vector<VariationalParams> params(m);
  std::vector<bool> warm(m, false);
  double prev_elbo = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.em_iters; ++iter) {
    std::vector<double> doc_elbo(m, 0.0);
    parallel_for(m, opts.threads, [&](int d) {
      const auto& doc = corpus.documents[d];
      if (doc.tags.empty()) return;
      if (!warm[d]) {
        params[d] = var_inference(doc, model, opts.var_tol, opts.var_iters);
      } else {
        // warm start: keep coordinate-ascending from the previous optimum
        auto& vp = params[d];
        std::vector<double> prev(k);
        for (int it = 0; it < opts.var_iters; ++it) {
          prev = vp.gamma;
          sweep(doc, model, vp.gamma, vp.phi);
          double change = 0.0;
          for (int i = 0; i < k; ++i) change += std::fabs(vp.gamma[i] - prev[i]);
          vp.iters = it + 1;
          if (change / double(k) < opts.var_tol) {
            vp.converged = true;
            break;
          }
        }
      }
      doc_elbo[d] = elbo(doc, model, params[d]);
    });
    for (int d = 0; d < m; ++d) warm[d] = true;
    double corpus_elbo = std::accumulate(doc_elbo.begin(), doc_elbo.end(), 0.0);

    // M-step: beta from expected counts, alpha by Newton
    std::vector<double> stats(std::size_t(k) * v, kBetaFloor);
    std::vector<double> alpha_stats(k, 0.0);
    int counted_docs = 0;
    for (int d = 0; d < m; ++d) {
      const auto& doc = corpus.documents[d];
      if (doc.tags.empty()) continue;
      ++counted_docs;
      const auto& vp = params[d];
      for (int t = 0; t < int(doc.tags.size()); ++t)
        for (int i = 0; i < k; ++i)
          stats[std::size_t(i) * v + doc.tags[t]] += vp.phi[std::size_t(t) * k + i];
      double gamma_sum = std::accumulate(vp.gamma.begin(), vp.gamma.end(), 0.0);
      for (int i = 0; i < k; ++i)
        alpha_stats[i] += digamma(vp.gamma[i]) - digamma(gamma_sum);
    }
    if (counted_docs == 0) throw DataError("empty corpus");
    for (int i = 0; i < k; ++i) {
      double total = std::accumulate(stats.begin() + std::size_t(i) * v,
                                     stats.begin() + std::size_t(i + 1) * v, 0.0);
      for (int j = 0; j < v; ++j)
        model.beta[std::size_t(i) * v + j] = stats[std::size_t(i) * v + j] / total;
    }
    model.alpha = dirichlet_mle_newton(model.alpha, alpha_stats, counted_docs);

    model.em_iters_run = iter + 1;
    model.final_elbo = corpus_elbo;
    if (iter > 0) {
      double rel = (corpus_elbo - prev_elbo) / std::fabs(prev_elbo);
      if (rel < opts.em_tol) {
        model.converged = true;
        break;
      }
    }
    prev_elbo = corpus_elbo;
  }
  return model;
}

std::vector<double> lda_tag_relevance(const LdaModel& model,
                                      const VariationalParams& vp) {
  const int k = model.num_topics;
  const int v = model.vocab_size;
  double gamma_sum = std::accumulate(vp.gamma.begin(), vp.gamma.end(), 0.0);
  std::vector<double> scores(v, 0.0);
  for (int i = 0; i < k; ++i) {
    double weight = vp.gamma[i] / gamma_sum;
    for (int j = 0; j < v; ++j) scores[j] += weight * model.beta_at(i, j);
  }
  return scores;
}

}  // namespace tagref
