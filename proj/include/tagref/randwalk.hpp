#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tagref/corpus.hpp"
#include "tagref/scores.hpp"

namespace tagref {

// Row-stochastic transition matrix over a document's tags.
struct TransitionMatrix {
  int n = 0;
  std::vector<double> p;  // row-major n x n

  double operator()(int i, int j) const { return p[std::size_t(i) * n + j]; }
};

// Transition probabilities proportional to tag similarity, diagonal zeroed
// before normalization. All-zero rows fall back to uniform over the other
// tags (over itself when the document has a single tag).
TransitionMatrix tag_transition_matrix(const TagDocument& doc,
                                       const TagSimilarityMatrix& sim);

// Power iteration from the uniform start until the L1 change drops below
// tol. Throws ConvergenceError carrying the last iterate on failure.
std::vector<double> stationary_distribution(const TransitionMatrix& t,
                                            double tol = 1e-10,
                                            int max_iters = 10000);

// Fixed point of p = lambda T^t p + (1 - lambda) restart.
std::vector<double> rwr(const TransitionMatrix& t,
                        std::span<const double> restart, double lambda,
                        double tol = 1e-10, int max_iters = 10000);

// Image-image kernel backing the visual cue: the dense Gaussian kernel over
// features when the corpus has them, otherwise the stored similarity graph
// (absent pairs count as 0).
class DocumentKernel {
 public:
  static DocumentKernel build(const Corpus& corpus);

  double operator()(int a, int b) const;
  // sum_{j in members, j != target} weights[j] * K(target, j)
  double weighted_sum(int target, std::span<const int> members,
                      std::span<const double> weights) const;

 private:
  const std::vector<std::vector<double>>* features_ = nullptr;
  const SimilarityGraph* graph_ = nullptr;
  double gamma_ = 0.0;
};

// Kernel-density relevance of tag u for every image carrying u, normalized
// to sum 1 over that set. Returned as (document index, score) pairs sorted
// by document index.
std::vector<std::pair<int, double>> visual_tag_relevance(const Corpus& corpus,
                                                         int tag);

// Per-document random walk with restarts, the restart being the normalized
// visual relevance of the document's own tags.
RelevanceScores two_step_refine(const Corpus& corpus,
                                const TagSimilarityMatrix& sim, double lambda,
                                int threads = 1);

struct JointOptions {
  double tol = 1e-8;
  int max_outer = 200;
  // when false the typicality weights stay uniform, which reduces the
  // iteration to the two-step scheme; used to validate the coupling
  bool update_weights = true;
  int threads = 1;
};

// Coupled refinement: per-tag weighted kernel walks provide restarts for the
// per-document walks, and the resulting relevances feed back as typicality
// weights until the scores stabilize.
RelevanceScores joint_refinement(const Corpus& corpus,
                                 const TagSimilarityMatrix& sim, double lambda,
                                 const JointOptions& opts = {});

}  // namespace tagref
