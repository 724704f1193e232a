#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tagref {

// Bijection between tag strings and 0-based indices, assigned in
// first-appearance order.
class Vocabulary {
 public:
  // returns the index of word, inserting it if unseen
  int add(const std::string& word);
  // -1 if the word is unknown
  int lookup(std::string_view word) const;
  const std::string& word_of(int index) const;
  int size() const { return int(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// One image's tag list. Indices into the vocabulary, no duplicates; the
// stored order is the user-supplied order and doubles as the baseline
// ranking.
struct TagDocument {
  std::string image_id;
  std::vector<int> tags;
};

struct Edge {
  int a = 0;
  int b = 0;
  double s = 0.0;
};

// Sparse symmetric image-image similarity. Only pairs with similarity
// strictly above the threshold are stored; no self edges.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;
  SimilarityGraph(int num_nodes, double threshold);

  void add_edge(int a, int b, double s);
  double threshold() const { return threshold_; }
  int num_nodes() const { return int(adj_.size()); }
  std::size_t edge_count() const { return edges_.size(); }
  // edges with a < b, in insertion order
  const std::vector<Edge>& edges() const { return edges_; }
  // (neighbor, similarity) pairs, sorted by neighbor index
  std::span<const std::pair<int, double>> neighbors(int node) const;
  // 0 when the pair is not connected
  double similarity(int a, int b) const;

 private:
  double threshold_ = 0.2;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  mutable std::vector<bool> sorted_;
  void sort_adjacency(int node) const;
};

// Symmetric V x V tag-tag similarity with unit diagonal, entries in [0,1].
class TagSimilarityMatrix {
 public:
  explicit TagSimilarityMatrix(int vocab_size);

  double operator()(int u, int v) const { return sim_[std::size_t(u) * n_ + v]; }
  // sets both (u,v) and (v,u)
  void set(int u, int v, double s);
  int size() const { return n_; }

 private:
  int n_;
  std::vector<double> sim_;
};

struct Corpus {
  Vocabulary vocabulary;
  std::vector<TagDocument> documents;
  // aligned with documents when present
  std::optional<std::vector<std::vector<double>>> features;
  std::optional<SimilarityGraph> graph;

  int num_documents() const { return int(documents.size()); }
  // -1 if the id is unknown
  int find_document(const std::string& image_id) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, int> id_index_;
};

using RawDocument = std::pair<std::string, std::vector<std::string>>;

// Builds the vocabulary in first-appearance order and drops duplicate tags
// within a document (first occurrence kept).
Corpus build_vocabulary(const std::vector<RawDocument>& raw_documents);

// exp(-||fi - fj||^2 / (2 gamma))
double visual_similarity(std::span<const double> fi, std::span<const double> fj,
                         double gamma);

// gamma = 9 * mean squared pairwise distance. Corpora above 2000 vectors are
// subsampled (seeded) before taking the mean.
double estimate_bandwidth(const std::vector<std::vector<double>>& features,
                          std::uint64_t subsample_seed = 0);

// Connects every pair whose Gaussian similarity exceeds the threshold, using
// the corpus bandwidth.
SimilarityGraph build_similarity_graph(const Corpus& corpus,
                                       double threshold = 0.2);

// Jaccard similarity of the document sets containing each tag.
TagSimilarityMatrix cooccurrence_similarity(const Corpus& corpus);

}  // namespace tagref
