#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tagref/corpus.hpp"
#include "tagref/eval.hpp"

namespace tagref {

struct SynthSpec {
  int num_topics = 4;
  int vocab_size = 60;
  int num_docs = 300;
  int doc_len_min = 6;
  int doc_len_max = 10;
  std::vector<double> alpha_true;  // K
  std::vector<double> beta_true;   // row-major K x V, rows sum to 1
  double mu1 = 0.8, mu2 = 0.2;
  double sigma1 = 0.1, sigma2 = 0.1;
  double edge_rate = 0.05;
  double noise = 0.0;  // width of the uniform jitter added to similarities
  double edge_threshold = 0.2;
  std::uint64_t seed = 0;

  double beta_at(int k, int v) const {
    return beta_true[std::size_t(k) * vocab_size + v];
  }
};

struct SynthTruth {
  std::vector<std::vector<double>> theta_true;  // per document, K
  std::vector<std::vector<int>> z_true;         // per document, per kept tag
  // positions into doc.tags, descending ideal score
  std::vector<std::vector<int>> ideal_ranking;
  RelevanceLabels labels;  // quantile-binned ideal scores, grades 1..5
};

// Topic-then-word sampling per document (duplicates dropped afterwards, so
// documents are tag sets), then pairwise tau/similarity draws over a
// Bernoulli(edge_rate) subset of pairs; similarities at or below the
// threshold are dropped.
std::pair<Corpus, SynthTruth> generate(const SynthSpec& spec);

// Per evaluation tag, the images whose top-k ideal full-vocabulary scores
// include it. Only tags with nonempty sets appear.
GroundTruthSets true_tag_sets(const Corpus& corpus, const SynthSpec& spec,
                              const SynthTruth& truth, int k);

// Row-stochastic K x V matrix concentrating `within_mass` of each topic on
// its own block of V/K words, the remainder spread uniformly.
std::vector<double> block_beta(int num_topics, int vocab_size,
                               double within_mass);

// Symmetric Dirichlet parameter helper.
std::vector<double> symmetric_alpha(int num_topics, double value);

}  // namespace tagref
