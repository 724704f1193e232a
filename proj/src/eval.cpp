#include "tagref/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tagref/error.hpp"

namespace tagref {

int RelevanceLabels::grade(int d, int tag) const {
  if (d >= int(per_doc.size())) return 0;
  auto it = per_doc[d].find(tag);
  return it == per_doc[d].end() ? 0 : it->second;
}

std::vector<int> rerank(const TagDocument& doc, std::span<const double> scores) {
  if (scores.size() != doc.tags.size())
    throw DataError("missing score for a tag of " + doc.image_id);
  std::vector<int> order(doc.tags.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

namespace {

double dcg(std::span<const int> grades, int n) {
  double acc = 0.0;
  for (int i = 1; i <= n; ++i)
    acc += (std::exp2(double(grades[i - 1])) - 1.0) / std::log2(double(1 + i));
  return acc;
}

}  // namespace

double ndcg_at_n(std::span<const int> ranked_grades, int n) {
  if (n < 1 || n > int(ranked_grades.size()))
    throw UsageError("ndcg cutoff out of range");
  for (int g : ranked_grades)
    if (g < 0) throw DataError("negative relevance grade");
  std::vector<int> ideal(ranked_grades.begin(), ranked_grades.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = dcg(ideal, n);
  if (idcg == 0.0) return 0.0;
  return dcg(ranked_grades, n) / idcg;
}

double mean_ndcg(const Corpus& corpus, const RelevanceLabels& labels,
                 const RelevanceScores& scores, int n) {
  if (n < 1) throw UsageError("ndcg cutoff out of range");
  if (scores.per_doc.size() != std::size_t(corpus.num_documents()))
    throw DataError("scores do not cover the corpus");
  double total = 0.0;
  int counted = 0;
  for (int d = 0; d < corpus.num_documents(); ++d) {
    const auto& doc = corpus.documents[d];
    if (doc.tags.empty() || !labels.has_labels(d)) continue;
    auto order = rerank(doc, scores.per_doc[d]);
    std::vector<int> grades(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      grades[i] = labels.grade(d, doc.tags[order[i]]);
    total += ndcg_at_n(grades, std::min(n, int(order.size())));
    ++counted;
  }
  if (counted == 0) throw DataError("no labeled documents to evaluate");
  return total / double(counted);
}

std::vector<int> retag(std::span<const double> vocab_scores, int k) {
  if (k < 1) throw UsageError("retag size must be positive");
  if (k > int(vocab_scores.size()))
    throw UsageError("retag size exceeds vocabulary");
  std::vector<int> order(vocab_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (vocab_scores[a] != vocab_scores[b])
      return vocab_scores[a] > vocab_scores[b];
    return a < b;
  });
  order.resize(k);
  return order;
}

FMeasure retrieval_f_measure(const Corpus& corpus,
                             const std::vector<std::vector<int>>& retag_sets,
                             const GroundTruthSets& truth) {
  if (retag_sets.size() != std::size_t(corpus.num_documents()))
    throw DataError("retag sets do not cover the corpus");

  std::vector<int> eval_tags;
  for (const auto& [tag, ids] : truth.per_tag) {
    if (tag < 0 || tag >= corpus.vocabulary.size())
      throw DataError("evaluation tag outside the vocabulary");
    if (ids.empty()) throw DataError("empty ground-truth set");
    eval_tags.push_back(tag);
  }
  std::sort(eval_tags.begin(), eval_tags.end());

  FMeasure out;
  double total = 0.0;
  for (int tag : eval_tags) {
    const auto& relevant = truth.per_tag.at(tag);
    std::size_t retrieved = 0, hit = 0;
    for (int d = 0; d < corpus.num_documents(); ++d) {
      const auto& set = retag_sets[d];
      if (std::find(set.begin(), set.end(), tag) == set.end()) continue;
      ++retrieved;
      if (relevant.count(corpus.documents[d].image_id)) ++hit;
    }
    double f = 0.0;
    if (retrieved > 0 && hit > 0) {
      double precision = double(hit) / double(retrieved);
      double recall = double(hit) / double(relevant.size());
      f = 2.0 * precision * recall / (precision + recall);
    }
    out.per_tag.emplace_back(tag, f);
    total += f;
  }
  out.mean = eval_tags.empty() ? 0.0 : total / double(eval_tags.size());
  return out;
}

std::vector<double> position_histogram(
    const Corpus& corpus, const RelevanceLabels& labels,
    const std::vector<std::vector<int>>& rankings) {
  if (rankings.size() != std::size_t(corpus.num_documents()))
    throw DataError("rankings do not cover the corpus");
  std::vector<double> counts;
  int counted = 0;
  for (int d = 0; d < corpus.num_documents(); ++d) {
    const auto& doc = corpus.documents[d];
    if (doc.tags.empty() || !labels.has_labels(d)) continue;
    const auto& order = rankings[d];
    if (order.size() != doc.tags.size())
      throw DataError("ranking does not cover document " + doc.image_id);
    int best_grade = 0;
    for (int pos : order)
      best_grade = std::max(best_grade, labels.grade(d, doc.tags[pos]));
    int best_pos = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (labels.grade(d, doc.tags[order[i]]) == best_grade) {
        best_pos = int(i);
        break;
      }
    }
    if (best_pos >= int(counts.size())) counts.resize(best_pos + 1, 0.0);
    counts[best_pos] += 1.0;
    ++counted;
  }
  for (double& c : counts) c /= double(std::max(counted, 1));
  return counts;
}

}  // namespace tagref
