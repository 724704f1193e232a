#include "tagref/randwalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tagref/error.hpp"
#include "tagref/util.hpp"

namespace tagref {

TransitionMatrix tag_transition_matrix(const TagDocument& doc,
                                       const TagSimilarityMatrix& sim) {
  const int n = int(doc.tags.size());
  if (n == 0) throw DataError("empty document: " + doc.image_id);
  TransitionMatrix t;
  t.n = n;
  t.p.assign(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = sim(doc.tags[i], doc.tags[j]);
      t.p[std::size_t(i) * n + j] = s;
      row_sum += s;
    }
    if (row_sum > 0.0) {
      for (int j = 0; j < n; ++j) t.p[std::size_t(i) * n + j] /= row_sum;
    } else if (n == 1) {
      t.p[0] = 1.0;
    } else {
      double u = 1.0 / double(n - 1);
      for (int j = 0; j < n; ++j)
        t.p[std::size_t(i) * n + j] = (j == i) ? 0.0 : u;
    }
  }
  return t;
}

namespace {

// one step p <- lambda * T^t p + (1 - lambda) * restart
void walk_step(const TransitionMatrix& t, double lambda,
               std::span<const double> restart, const std::vector<double>& p,
               std::vector<double>& next) {
  const int n = t.n;
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += t.p[std::size_t(i) * n + j] * p[i];
    next[j] = lambda * acc + (restart.empty() ? 0.0 : (1.0 - lambda) * restart[j]);
  }
}

std::vector<double> iterate_walk(const TransitionMatrix& t, double lambda,
                                 std::span<const double> restart,
                                 std::vector<double> p, double tol,
                                 int max_iters, const char* what) {
  std::vector<double> next(t.n);
  for (int it = 0; it < max_iters; ++it) {
    walk_step(t, lambda, restart, p, next);
    double change = 0.0;
    for (int j = 0; j < t.n; ++j) change += std::fabs(next[j] - p[j]);
    p.swap(next);
    if (change < tol) return p;
  }
  throw ConvergenceError(std::string(what) + " did not converge", {p});
}

}  // namespace

std::vector<double> stationary_distribution(const TransitionMatrix& t,
                                            double tol, int max_iters) {
  std::vector<double> p(t.n, 1.0 / double(t.n));
  return iterate_walk(t, 1.0, {}, std::move(p), tol, max_iters,
                      "stationary distribution");
}

std::vector<double> rwr(const TransitionMatrix& t,
                        std::span<const double> restart, double lambda,
                        double tol, int max_iters) {
  if (int(restart.size()) != t.n)
    throw DataError("restart vector dimension mismatch");
  if (lambda < 0.0 || lambda > 1.0)
    throw UsageError("lambda must be in [0, 1]");
  double sum = std::accumulate(restart.begin(), restart.end(), 0.0);
  if (std::fabs(sum - 1.0) > 1e-6)
    throw DataError("restart vector must sum to 1");
  if (lambda == 0.0) return std::vector<double>(restart.begin(), restart.end());
  std::vector<double> p(t.n, 1.0 / double(t.n));
  return iterate_walk(t, lambda, restart, std::move(p), tol, max_iters,
                      "random walk with restarts");
}

DocumentKernel DocumentKernel::build(const Corpus& corpus) {
  DocumentKernel k;
  if (corpus.features) {
    k.features_ = &*corpus.features;
    k.gamma_ = estimate_bandwidth(*corpus.features);
  } else if (corpus.graph) {
    k.graph_ = &*corpus.graph;
  } else {
    throw DataError("corpus has neither features nor a similarity graph");
  }
  return k;
}

double DocumentKernel::operator()(int a, int b) const {
  if (features_) return visual_similarity((*features_)[a], (*features_)[b], gamma_);
  return graph_->similarity(a, b);
}

double DocumentKernel::weighted_sum(int target, std::span<const int> members,
                                    std::span<const double> weights) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] == target) continue;
    acc += weights[i] * (*this)(target, members[i]);
  }
  return acc;
}

namespace {

std::vector<std::vector<int>> documents_per_tag(const Corpus& corpus) {
  std::vector<std::vector<int>> docs_of(corpus.vocabulary.size());
  for (int d = 0; d < corpus.num_documents(); ++d)
    for (int tag : corpus.documents[d].tags) docs_of[tag].push_back(d);
  return docs_of;
}

// kernel-density scores over members, normalized to sum 1; uniform when
// every kernel sum is zero (e.g. a single-image tag set)
std::vector<double> kde_scores(const DocumentKernel& kernel,
                               std::span<const int> members,
                               std::span<const double> weights) {
  std::vector<double> scores(members.size());
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    scores[i] = kernel.weighted_sum(members[i], members, weights);
    total += scores[i];
  }
  if (total > 0.0) {
    for (double& s : scores) s /= total;
  } else {
    std::fill(scores.begin(), scores.end(), 1.0 / double(members.size()));
  }
  return scores;
}

}  // namespace

std::vector<std::pair<int, double>> visual_tag_relevance(const Corpus& corpus,
                                                         int tag) {
  if (tag < 0 || tag >= corpus.vocabulary.size())
    throw DataError("unknown tag index: " + std::to_string(tag));
  auto docs_of = documents_per_tag(corpus);
  const auto& members = docs_of[tag];
  if (members.empty())
    throw DataError("no images carry tag: " + corpus.vocabulary.word_of(tag));
  DocumentKernel kernel = DocumentKernel::build(corpus);
  std::vector<double> uniform(members.size(), 1.0);
  auto scores = kde_scores(kernel, members, uniform);
  std::vector<std::pair<int, double>> out(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    out[i] = {members[i], scores[i]};
  return out;
}

namespace {

// Restart distribution for one document: the given per-(tag, doc) relevance
// values restricted to the document's tags, normalized after restriction.
// Falls back to uniform when every value is zero.
std::vector<double> restart_for_doc(
    const Corpus& corpus, int d,
    const std::vector<std::vector<double>>& tag_doc_scores,
    const std::vector<std::vector<int>>& docs_of,
    const std::vector<std::vector<int>>& member_pos) {
  const auto& tags = corpus.documents[d].tags;
  std::vector<double> restart(tags.size(), 0.0);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    int tag = tags[i];
    int pos = member_pos[tag][d];
    restart[i] = tag_doc_scores[tag][pos];
  }
  double sum = std::accumulate(restart.begin(), restart.end(), 0.0);
  if (sum > 0.0) {
    for (double& r : restart) r /= sum;
  } else {
    std::fill(restart.begin(), restart.end(), 1.0 / double(restart.size()));
  }
  return restart;
}

// member_pos[tag][doc] = index of doc within docs_of[tag] (or -1)
std::vector<std::vector<int>> member_positions(
    const Corpus& corpus, const std::vector<std::vector<int>>& docs_of) {
  std::vector<std::vector<int>> pos(docs_of.size());
  for (std::size_t tag = 0; tag < docs_of.size(); ++tag) {
    pos[tag].assign(corpus.num_documents(), -1);
    for (std::size_t i = 0; i < docs_of[tag].size(); ++i)
      pos[tag][docs_of[tag][i]] = int(i);
  }
  return pos;
}

}  // namespace

RelevanceScores two_step_refine(const Corpus& corpus,
                                const TagSimilarityMatrix& sim, double lambda,
                                int threads) {
  DocumentKernel kernel = DocumentKernel::build(corpus);
  auto docs_of = documents_per_tag(corpus);
  auto member_pos = member_positions(corpus, docs_of);

  // visual relevance of every tag over its image set
  std::vector<std::vector<double>> tag_doc_scores(docs_of.size());
  parallel_for(int(docs_of.size()), threads, [&](int tag) {
    if (docs_of[tag].empty()) return;
    std::vector<double> uniform(docs_of[tag].size(), 1.0);
    tag_doc_scores[tag] = kde_scores(kernel, docs_of[tag], uniform);
  });

  RelevanceScores result;
  result.per_doc.resize(corpus.num_documents());
  parallel_for(corpus.num_documents(), threads, [&](int d) {
    if (corpus.documents[d].tags.empty()) return;
    auto restart = restart_for_doc(corpus, d, tag_doc_scores, docs_of, member_pos);
    auto t = tag_transition_matrix(corpus.documents[d], sim);
    result.per_doc[d] = rwr(t, restart, lambda);
  });
  return result;
}

RelevanceScores joint_refinement(const Corpus& corpus,
                                 const TagSimilarityMatrix& sim, double lambda,
                                 const JointOptions& opts) {
  DocumentKernel kernel = DocumentKernel::build(corpus);
  auto docs_of = documents_per_tag(corpus);
  auto member_pos = member_positions(corpus, docs_of);
  const int m = corpus.num_documents();
  const int v = corpus.vocabulary.size();

  // typicality weights a_u(I), aligned with docs_of[u]; start uniform
  std::vector<std::vector<double>> weights(v);
  for (int tag = 0; tag < v; ++tag)
    weights[tag].assign(docs_of[tag].size(), 1.0);

  std::vector<std::vector<double>> tag_doc_scores(v);
  RelevanceScores scores;
  scores.per_doc.assign(m, {});
  std::vector<TransitionMatrix> transition(m);
  for (int d = 0; d < m; ++d)
    if (!corpus.documents[d].tags.empty())
      transition[d] = tag_transition_matrix(corpus.documents[d], sim);

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    // (1) weighted kernel walk per tag
    parallel_for(v, opts.threads, [&](int tag) {
      if (docs_of[tag].empty()) return;
      tag_doc_scores[tag] = kde_scores(kernel, docs_of[tag], weights[tag]);
    });

    // (2) per-document walk with the refreshed restarts
    RelevanceScores next;
    next.per_doc.assign(m, {});
    parallel_for(m, opts.threads, [&](int d) {
      if (corpus.documents[d].tags.empty()) return;
      auto restart =
          restart_for_doc(corpus, d, tag_doc_scores, docs_of, member_pos);
      next.per_doc[d] = rwr(transition[d], restart, lambda);
    });

    double max_change = 0.0;
    for (int d = 0; d < m; ++d) {
      if (scores.per_doc[d].size() != next.per_doc[d].size()) {
        max_change = std::numeric_limits<double>::infinity();
        continue;
      }
      double change = 0.0;
      for (std::size_t i = 0; i < next.per_doc[d].size(); ++i)
        change += std::fabs(next.per_doc[d][i] - scores.per_doc[d][i]);
      max_change = std::max(max_change, change);
    }
    scores = std::move(next);
    if (outer > 0 && max_change < opts.tol) return scores;

    if (opts.update_weights) {
      // feed relevances back as typicality weights
      for (int d = 0; d < m; ++d) {
        const auto& tags = corpus.documents[d].tags;
        for (std::size_t i = 0; i < tags.size(); ++i)
          weights[tags[i]][member_pos[tags[i]][d]] = scores.per_doc[d][i];
      }
    }
  }
  throw ConvergenceError("joint refinement did not converge",
                         std::move(scores.per_doc));
}

}  // namespace tagref
