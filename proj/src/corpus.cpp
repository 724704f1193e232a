#include "tagref/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tagref/error.hpp"
#include "tagref/rng.hpp"

namespace tagref {

int Vocabulary::add(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  int id = int(words_.size());
  words_.push_back(word);
  index_.emplace(word, id);
  return id;
}

int Vocabulary::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

const std::string& Vocabulary::word_of(int index) const {
  if (index < 0 || index >= int(words_.size()))
    throw DataError("vocabulary index out of range: " + std::to_string(index));
  return words_[index];
}

SimilarityGraph::SimilarityGraph(int num_nodes, double threshold)
    : threshold_(threshold), adj_(num_nodes), sorted_(num_nodes, true) {
  if (threshold < 0.0 || threshold >= 1.0)
    throw UsageError("similarity threshold must be in [0, 1)");
}

void SimilarityGraph::add_edge(int a, int b, double s) {
  if (a == b) throw DataError("self edge in similarity graph");
  if (a < 0 || b < 0 || a >= num_nodes() || b >= num_nodes())
    throw DataError("similarity graph node out of range");
  if (!(s > threshold_) || s > 1.0)
    throw DataError("edge similarity outside (threshold, 1]");
  if (a > b) std::swap(a, b);
  edges_.push_back({a, b, s});
  adj_[a].emplace_back(b, s);
  adj_[b].emplace_back(a, s);
  sorted_[a] = sorted_[b] = false;
}

void SimilarityGraph::sort_adjacency(int node) const {
  auto& list = const_cast<std::vector<std::pair<int, double>>&>(adj_[node]);
  std::sort(list.begin(), list.end());
  sorted_[node] = true;
}

std::span<const std::pair<int, double>> SimilarityGraph::neighbors(int node) const {
  if (!sorted_[node]) sort_adjacency(node);
  return adj_[node];
}

double SimilarityGraph::similarity(int a, int b) const {
  if (a == b || a < 0 || b < 0 || a >= num_nodes() || b >= num_nodes()) return 0.0;
  auto list = neighbors(a);
  auto it = std::lower_bound(list.begin(), list.end(),
                             std::pair<int, double>{b, -1.0});
  if (it != list.end() && it->first == b) return it->second;
  return 0.0;
}

TagSimilarityMatrix::TagSimilarityMatrix(int vocab_size)
    : n_(vocab_size), sim_(std::size_t(vocab_size) * vocab_size, 0.0) {
  for (int i = 0; i < n_; ++i) sim_[std::size_t(i) * n_ + i] = 1.0;
}

void TagSimilarityMatrix::set(int u, int v, double s) {
  if (s < 0.0 || s > 1.0) throw DataError("tag similarity outside [0, 1]");
  sim_[std::size_t(u) * n_ + v] = s;
  sim_[std::size_t(v) * n_ + u] = s;
}

int Corpus::find_document(const std::string& image_id) const {
  auto it = id_index_.find(image_id);
  return it == id_index_.end() ? -1 : it->second;
}

void Corpus::rebuild_index() {
  id_index_.clear();
  for (int d = 0; d < int(documents.size()); ++d) {
    auto [it, inserted] = id_index_.emplace(documents[d].image_id, d);
    if (!inserted)
      throw DataError("duplicate image_id: " + documents[d].image_id);
  }
}

Corpus build_vocabulary(const std::vector<RawDocument>& raw_documents) {
  if (raw_documents.empty()) throw DataError("empty corpus");
  Corpus corpus;
  for (const auto& [image_id, tags] : raw_documents) {
    TagDocument doc;
    doc.image_id = image_id;
    std::set<int> seen;
    for (const auto& tag : tags) {
      if (tag.empty()) throw DataError("empty tag string in " + image_id);
      int v = corpus.vocabulary.add(tag);
      if (seen.insert(v).second) doc.tags.push_back(v);
    }
    corpus.documents.push_back(std::move(doc));
  }
  corpus.rebuild_index();
  return corpus;
}

double visual_similarity(std::span<const double> fi, std::span<const double> fj,
                         double gamma) {
  if (fi.size() != fj.size())
    throw DataError("feature dimension mismatch");
  if (!(gamma > 0.0)) throw UsageError("bandwidth must be positive");
  double d2 = 0.0;
  for (std::size_t k = 0; k < fi.size(); ++k) {
    double diff = fi[k] - fj[k];
    d2 += diff * diff;
  }
  return std::exp(-d2 / (2.0 * gamma));
}

double estimate_bandwidth(const std::vector<std::vector<double>>& features,
                          std::uint64_t subsample_seed) {
  if (features.size() < 2) throw DataError("degenerate features");

  std::vector<int> idx(features.size());
  std::iota(idx.begin(), idx.end(), 0);
  constexpr std::size_t kMaxSample = 2000;
  if (idx.size() > kMaxSample) {
    Rng rng(mix_seed(subsample_seed, 0x5ba11d));
    for (std::size_t i = 0; i < kMaxSample; ++i) {
      int j = rng.uniform_int(int(i), int(idx.size()) - 1);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(kMaxSample);
  }

  // sum_{i<j} ||xi-xj||^2 = m * sum ||xi||^2 - ||sum xi||^2
  const std::size_t m = idx.size();
  const std::size_t dim = features[idx[0]].size();
  double sum_norm2 = 0.0;
  std::vector<double> total(dim, 0.0);
  for (int i : idx) {
    const auto& f = features[i];
    if (f.size() != dim) throw DataError("feature dimension mismatch");
    for (std::size_t k = 0; k < dim; ++k) {
      sum_norm2 += f[k] * f[k];
      total[k] += f[k];
    }
  }
  double norm_total2 = 0.0;
  for (double t : total) norm_total2 += t * t;
  double pair_sum = double(m) * sum_norm2 - norm_total2;
  double pairs = 0.5 * double(m) * double(m - 1);
  double mean = std::max(pair_sum, 0.0) / pairs;
  if (!(mean > 0.0)) throw DataError("degenerate features");
  return 9.0 * mean;
}

SimilarityGraph build_similarity_graph(const Corpus& corpus, double threshold) {
  if (!corpus.features)
    throw DataError("similarity graph requires feature vectors");
  const auto& feats = *corpus.features;
  double gamma = estimate_bandwidth(feats);
  SimilarityGraph graph(corpus.num_documents(), threshold);
  for (int i = 0; i < corpus.num_documents(); ++i) {
    for (int j = i + 1; j < corpus.num_documents(); ++j) {
      double s = visual_similarity(feats[i], feats[j], gamma);
      if (s > threshold) graph.add_edge(i, j, s);
    }
  }
  return graph;
}

TagSimilarityMatrix cooccurrence_similarity(const Corpus& corpus) {
  if (corpus.documents.empty()) throw DataError("empty corpus");
  const int v = corpus.vocabulary.size();
  std::vector<std::vector<int>> docs_of(v);
  for (int d = 0; d < corpus.num_documents(); ++d)
    for (int tag : corpus.documents[d].tags) docs_of[tag].push_back(d);

  TagSimilarityMatrix sim(v);
  for (int a = 0; a < v; ++a) {
    for (int b = a + 1; b < v; ++b) {
      const auto& da = docs_of[a];
      const auto& db = docs_of[b];
      if (da.empty() && db.empty()) continue;
      std::size_t inter = 0;
      std::size_t i = 0, j = 0;
      while (i < da.size() && j < db.size()) {
        if (da[i] == db[j]) {
          ++inter;
          ++i;
          ++j;
        } else if (da[i] < db[j]) {
          ++i;
        } else {
          ++j;
        }
      }
      std::size_t uni = da.size() + db.size() - inter;
      if (uni > 0) sim.set(a, b, double(inter) / double(uni));
    }
  }
  return sim;
}

}  // namespace tagref
