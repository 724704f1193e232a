#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tagref/corpus.hpp"
#include "tagref/scores.hpp"

namespace tagref {

// Graded relevance judgments: per document, tag index -> grade in 1..5.
// Labeled tags must be a subset of the document's own tags.
struct RelevanceLabels {
  std::vector<std::unordered_map<int, int>> per_doc;

  bool has_labels(int d) const {
    return d < int(per_doc.size()) && !per_doc[d].empty();
  }
  // 0 for unlabeled tags
  int grade(int d, int tag) const;
};

// Per evaluation tag, the set of truly relevant image ids.
struct GroundTruthSets {
  std::unordered_map<int, std::unordered_set<std::string>> per_tag;
};

// Positions into doc.tags sorted by descending score, ties keeping the
// original order. Throws when scores do not cover the tags.
std::vector<int> rerank(const TagDocument& doc, std::span<const double> scores);

// DCG over positions 1..n with gain 2^grade - 1 and log2(1 + i) discount,
// normalized by the DCG of the descending-sorted grades. All-zero grade
// sequences score 0.
double ndcg_at_n(std::span<const int> ranked_grades, int n);

// Mean per-document NDCG over documents with at least one labeled tag; n is
// capped at each document's tag count.
double mean_ndcg(const Corpus& corpus, const RelevanceLabels& labels,
                 const RelevanceScores& scores, int n);

// The k highest-scoring tags, ties broken by ascending vocabulary index.
std::vector<int> retag(std::span<const double> vocab_scores, int k);

struct FMeasure {
  std::vector<std::pair<int, double>> per_tag;  // sorted by tag index
  double mean = 0.0;
};

// Retrieval F-measure per evaluation tag: an image is retrieved for tag u
// when u is in its retag set. F is 0 when nothing is retrieved.
FMeasure retrieval_f_measure(const Corpus& corpus,
                             const std::vector<std::vector<int>>& retag_sets,
                             const GroundTruthSets& truth);

// Fraction of labeled documents whose highest-graded tag lands at each
// 1-based position of the given rankings (permutations into doc.tags).
// Entry p-1 of the result holds the fraction for position p.
std::vector<double> position_histogram(
    const Corpus& corpus, const RelevanceLabels& labels,
    const std::vector<std::vector<int>>& rankings);

}  // namespace tagref
