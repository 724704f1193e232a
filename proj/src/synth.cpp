#include "tagref/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <span>
#include <string>

#include "tagref/error.hpp"
#include "tagref/rng.hpp"

namespace tagref {

namespace {

void validate_spec(const SynthSpec& spec) {
  if (spec.num_topics < 1 || spec.vocab_size < 1 || spec.num_docs < 1)
    throw UsageError("synthetic spec dimensions must be positive");
  if (spec.doc_len_min < 1 || spec.doc_len_max < spec.doc_len_min)
    throw UsageError("invalid document length range");
  if (spec.doc_len_max > spec.vocab_size)
    throw UsageError("document length exceeds vocabulary size");
  if (int(spec.alpha_true.size()) != spec.num_topics)
    throw UsageError("alpha_true dimension mismatch");
  if (int(spec.beta_true.size()) != spec.num_topics * spec.vocab_size)
    throw UsageError("beta_true dimension mismatch");
  for (double a : spec.alpha_true)
    if (!(a > 0.0)) throw UsageError("alpha_true entries must be positive");
  if (!(spec.mu1 > spec.mu2))
    throw UsageError("mu1 must exceed mu2");
  if (spec.sigma1 <= 0.0 || spec.sigma2 <= 0.0)
    throw UsageError("sigma values must be positive");
  if (spec.edge_rate < 0.0 || spec.edge_rate > 1.0)
    throw UsageError("edge_rate must be in [0, 1]");
  if (spec.noise < 0.0) throw UsageError("noise must be nonnegative");
}

double histogram_intersection(std::span<const double> a,
                              std::span<const double> b) {
  double hi = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) hi += std::min(a[k], b[k]);
  return hi;
}

std::string image_name(int d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "img%05d", d);
  return buf;
}

}  // namespace

std::pair<Corpus, SynthTruth> generate(const SynthSpec& spec) {
  validate_spec(spec);
  const int k = spec.num_topics;
  const int v = spec.vocab_size;
  const int m = spec.num_docs;
  Rng rng(mix_seed(spec.seed, 0x5f27));

  Corpus corpus;
  for (int j = 0; j < v; ++j) corpus.vocabulary.add("tag" + std::to_string(j));

  SynthTruth truth;
  truth.theta_true.resize(m);
  truth.z_true.resize(m);
  truth.ideal_ranking.resize(m);
  truth.labels.per_doc.resize(m);

  std::vector<double> word_mass(v);
  for (int d = 0; d < m; ++d) {
    rng.dirichlet(spec.alpha_true, truth.theta_true[d]);
    int len = rng.uniform_int(spec.doc_len_min, spec.doc_len_max);

    TagDocument doc;
    doc.image_id = image_name(d);
    std::set<int> seen;
    for (int t = 0; t < len; ++t) {
      int topic = rng.categorical(truth.theta_true[d]);
      for (int j = 0; j < v; ++j) word_mass[j] = spec.beta_at(topic, j);
      int word = rng.categorical(word_mass);
      if (seen.insert(word).second) {
        doc.tags.push_back(word);
        truth.z_true[d].push_back(topic);
      }
    }
    corpus.documents.push_back(std::move(doc));
  }
  corpus.rebuild_index();

  SimilarityGraph graph(m, spec.edge_threshold);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if (rng.uniform01() >= spec.edge_rate) continue;
      double hi = histogram_intersection(truth.theta_true[a], truth.theta_true[b]);
      int tau = rng.uniform01() < hi ? 1 : 2;
      double s = (tau == 1) ? spec.mu1 + spec.sigma1 * rng.normal()
                            : spec.mu2 + spec.sigma2 * rng.normal();
      if (spec.noise > 0.0) s += (rng.uniform01() - 0.5) * spec.noise;
      s = std::min(s, 1.0);
      if (s > spec.edge_threshold) graph.add_edge(a, b, s);
    }
  }
  corpus.graph = std::move(graph);

  // ideal per-tag scores and quantile-binned grades
  for (int d = 0; d < m; ++d) {
    const auto& tags = corpus.documents[d].tags;
    const int n = int(tags.size());
    std::vector<double> score(n);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t)
        acc += truth.theta_true[d][t] * spec.beta_at(t, tags[i]);
      score[i] = acc;
    }

    std::vector<int> desc(n);
    std::iota(desc.begin(), desc.end(), 0);
    std::stable_sort(desc.begin(), desc.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    truth.ideal_ranking[d] = desc;

    std::vector<int> asc(desc.rbegin(), desc.rend());
    int prev_grade = 0;
    double prev_score = -1.0;
    for (int r = 0; r < n; ++r) {
      int grade = 1 + (r * 5) / n;
      if (r > 0 && score[asc[r]] == prev_score) grade = prev_grade;
      truth.labels.per_doc[d][tags[asc[r]]] = grade;
      prev_grade = grade;
      prev_score = score[asc[r]];
    }
  }
  return {std::move(corpus), std::move(truth)};
}

GroundTruthSets true_tag_sets(const Corpus& corpus, const SynthSpec& spec,
                              const SynthTruth& truth, int top_k) {
  if (top_k < 1 || top_k > spec.vocab_size)
    throw UsageError("top_k outside the vocabulary range");
  GroundTruthSets sets;
  std::vector<double> full(spec.vocab_size);
  std::vector<int> order(spec.vocab_size);
  for (int d = 0; d < corpus.num_documents(); ++d) {
    for (int j = 0; j < spec.vocab_size; ++j) {
      double acc = 0.0;
      for (int t = 0; t < spec.num_topics; ++t)
        acc += truth.theta_true[d][t] * spec.beta_at(t, j);
      full[j] = acc;
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (full[a] != full[b]) return full[a] > full[b];
      return a < b;
    });
    for (int i = 0; i < top_k; ++i)
      sets.per_tag[order[i]].insert(corpus.documents[d].image_id);
  }
  return sets;
}

std::vector<double> block_beta(int num_topics, int vocab_size,
                               double within_mass) {
  if (within_mass <= 0.0 || within_mass > 1.0)
    throw UsageError("within_mass must be in (0, 1]");
  std::vector<double> beta(std::size_t(num_topics) * vocab_size, 0.0);
  int block = vocab_size / num_topics;
  if (block < 1) throw UsageError("vocabulary smaller than topic count");
  for (int t = 0; t < num_topics; ++t) {
    int lo = t * block;
    int hi = (t == num_topics - 1) ? vocab_size : lo + block;
    double inside = within_mass / double(hi - lo);
    double outside =
        vocab_size == hi - lo ? 0.0 : (1.0 - within_mass) / double(vocab_size - (hi - lo));
    for (int j = 0; j < vocab_size; ++j)
      beta[std::size_t(t) * vocab_size + j] = (j >= lo && j < hi) ? inside : outside;
  }
  return beta;
}

std::vector<double> symmetric_alpha(int num_topics, double value) {
  if (!(value > 0.0)) throw UsageError("alpha must be positive");
  return std::vector<double>(num_topics, value);
}

}  // namespace tagref
