#include "tagref/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <unordered_map>

#include "tagref/error.hpp"
#include "tagref/util.hpp"

namespace tagref {

namespace {

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == delim) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

// Line-oriented reader that skips comments/blanks and remembers the current
// line number for error messages.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : path_(path.string()), in_(path) {
    if (!in_) throw DataError("cannot open " + path_);
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(path_ + ":" + std::to_string(lineno_) + ": " + msg);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  int lineno_ = 0;
};

double parse_double(const LineReader& reader, const std::string& token) {
  char* end = nullptr;
  double x = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || token.empty())
    reader.fail("bad number '" + token + "'");
  return x;
}

long parse_int(const LineReader& reader, const std::string& token) {
  char* end = nullptr;
  long x = std::strtol(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || token.empty())
    reader.fail("bad integer '" + token + "'");
  return x;
}

class Writer {
 public:
  Writer(const std::filesystem::path& path,
         const std::vector<std::string>& header)
      : path_(path.string()), out_(path) {
    if (!out_) throw DataError("cannot write " + path_);
    for (const auto& line : header) out_ << "# " << line << "\n";
  }

  std::ofstream& stream() { return out_; }

  void close() {
    out_.close();
    if (!out_) throw DataError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

int require_document(const LineReader& reader, const Corpus& corpus,
                     const std::string& id) {
  int d = corpus.find_document(id);
  if (d < 0) reader.fail("unknown image_id '" + id + "'");
  return d;
}

int require_tag(const LineReader& reader, const Corpus& corpus,
                const std::string& tag) {
  int v = corpus.vocabulary.lookup(tag);
  if (v < 0) reader.fail("unknown tag '" + tag + "'");
  return v;
}

}  // namespace

Corpus load_documents(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<RawDocument> raw;
  std::string line;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 2) reader.fail("expected image_id<TAB>tags");
    if (fields[0].empty()) reader.fail("empty image_id");
    std::vector<std::string> tags;
    if (!fields[1].empty()) {
      for (auto& tag : split(fields[1], ',')) {
        if (tag.empty()) reader.fail("empty tag");
        tags.push_back(tag);
      }
    }
    raw.emplace_back(fields[0], std::move(tags));
  }
  if (raw.empty()) throw DataError("empty corpus");
  return build_vocabulary(raw);
}

void attach_features(Corpus& corpus, const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<std::vector<double>> features(corpus.num_documents());
  std::vector<bool> seen(corpus.num_documents(), false);
  std::string line;
  std::size_t dim = 0;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 2) reader.fail("expected image_id<TAB>values");
    int d = require_document(reader, corpus, fields[0]);
    if (seen[d]) reader.fail("duplicate features for '" + fields[0] + "'");
    std::vector<double> values;
    std::istringstream iss(fields[1]);
    std::string token;
    while (iss >> token) values.push_back(parse_double(reader, token));
    if (values.empty()) reader.fail("empty feature vector");
    for (double x : values)
      if (!std::isfinite(x)) reader.fail("non-finite feature value");
    if (dim == 0) dim = values.size();
    if (values.size() != dim) reader.fail("feature dimension mismatch");
    features[d] = std::move(values);
    seen[d] = true;
  }
  for (int d = 0; d < corpus.num_documents(); ++d)
    if (!seen[d])
      throw DataError("missing features for " + corpus.documents[d].image_id);
  corpus.features = std::move(features);
}

void attach_similarities(Corpus& corpus, const std::filesystem::path& path,
                         double threshold) {
  LineReader reader(path);
  SimilarityGraph graph(corpus.num_documents(), threshold);
  std::string line;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) reader.fail("expected id_a<TAB>id_b<TAB>similarity");
    int a = require_document(reader, corpus, fields[0]);
    int b = require_document(reader, corpus, fields[1]);
    double s = parse_double(reader, fields[2]);
    if (a == b) reader.fail("self similarity");
    if (!(s > 0.0) || s > 1.0) reader.fail("similarity outside (0, 1]");
    if (!(s > threshold)) reader.fail("similarity at or below threshold");
    graph.add_edge(a, b, s);
  }
  corpus.graph = std::move(graph);
}

RelevanceLabels load_labels(const std::filesystem::path& path,
                            const Corpus& corpus) {
  LineReader reader(path);
  RelevanceLabels labels;
  labels.per_doc.resize(corpus.num_documents());
  std::string line;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) reader.fail("expected image_id<TAB>tag<TAB>grade");
    int d = require_document(reader, corpus, fields[0]);
    int v = require_tag(reader, corpus, fields[1]);
    long grade = parse_int(reader, fields[2]);
    if (grade < 1 || grade > 5) reader.fail("grade outside 1..5");
    const auto& tags = corpus.documents[d].tags;
    if (std::find(tags.begin(), tags.end(), v) == tags.end())
      reader.fail("labeled tag '" + fields[1] + "' not in document");
    labels.per_doc[d][v] = int(grade);
  }
  return labels;
}

GroundTruthSets load_truth_sets(const std::filesystem::path& path,
                                const Corpus& corpus) {
  LineReader reader(path);
  GroundTruthSets sets;
  std::string line;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 2) reader.fail("expected tag<TAB>image_ids");
    int v = require_tag(reader, corpus, fields[0]);
    for (auto& id : split(fields[1], ',')) {
      if (id.empty()) reader.fail("empty image_id");
      require_document(reader, corpus, id);
      sets.per_tag[v].insert(id);
    }
  }
  return sets;
}

void write_documents(const Corpus& corpus, const std::filesystem::path& path,
                     const std::vector<std::string>& header) {
  Writer w(path, header);
  for (const auto& doc : corpus.documents) {
    w.stream() << doc.image_id << '\t';
    for (std::size_t i = 0; i < doc.tags.size(); ++i) {
      if (i) w.stream() << ',';
      w.stream() << corpus.vocabulary.word_of(doc.tags[i]);
    }
    w.stream() << '\n';
  }
  w.close();
}

void write_similarities(const Corpus& corpus, const std::filesystem::path& path,
                        const std::vector<std::string>& header) {
  if (!corpus.graph) throw DataError("corpus has no similarity graph");
  Writer w(path, header);
  for (const auto& edge : corpus.graph->edges()) {
    w.stream() << corpus.documents[edge.a].image_id << '\t'
               << corpus.documents[edge.b].image_id << '\t'
               << fmt_double(edge.s) << '\n';
  }
  w.close();
}

void write_labels(const Corpus& corpus, const RelevanceLabels& labels,
                  const std::filesystem::path& path,
                  const std::vector<std::string>& header) {
  Writer w(path, header);
  for (int d = 0; d < corpus.num_documents(); ++d) {
    if (d >= int(labels.per_doc.size())) break;
    for (int tag : corpus.documents[d].tags) {
      auto it = labels.per_doc[d].find(tag);
      if (it == labels.per_doc[d].end()) continue;
      w.stream() << corpus.documents[d].image_id << '\t'
                 << corpus.vocabulary.word_of(tag) << '\t' << it->second << '\n';
    }
  }
  w.close();
}

void write_truth_sets(const Corpus& corpus, const GroundTruthSets& sets,
                      const std::filesystem::path& path,
                      const std::vector<std::string>& header) {
  Writer w(path, header);
  std::vector<int> tags;
  for (const auto& [tag, ids] : sets.per_tag) tags.push_back(tag);
  std::sort(tags.begin(), tags.end());
  for (int tag : tags) {
    std::vector<std::string> ids(sets.per_tag.at(tag).begin(),
                                 sets.per_tag.at(tag).end());
    std::sort(ids.begin(), ids.end());
    w.stream() << corpus.vocabulary.word_of(tag) << '\t';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) w.stream() << ',';
      w.stream() << ids[i];
    }
    w.stream() << '\n';
  }
  w.close();
}

void write_scores(const Corpus& corpus, const RelevanceScores& scores,
                  const std::filesystem::path& path,
                  const std::vector<std::string>& header) {
  if (scores.per_doc.size() != std::size_t(corpus.num_documents()))
    throw DataError("scores do not cover the corpus");
  Writer w(path, header);
  for (int d = 0; d < corpus.num_documents(); ++d) {
    const auto& doc = corpus.documents[d];
    if (doc.tags.empty()) continue;
    auto order = rerank(doc, scores.per_doc[d]);
    for (int pos : order) {
      w.stream() << doc.image_id << '\t' << corpus.vocabulary.word_of(doc.tags[pos])
                 << '\t' << fmt_double(scores.per_doc[d][pos]) << '\n';
    }
  }
  w.close();
}

RelevanceScores load_scores(const std::filesystem::path& path,
                            const Corpus& corpus) {
  LineReader reader(path);
  std::vector<std::unordered_map<int, double>> by_doc(corpus.num_documents());
  std::string line;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) reader.fail("expected image_id<TAB>tag<TAB>score");
    int d = require_document(reader, corpus, fields[0]);
    int v = require_tag(reader, corpus, fields[1]);
    double s = parse_double(reader, fields[2]);
    if (!by_doc[d].emplace(v, s).second)
      reader.fail("duplicate score for tag '" + fields[1] + "'");
  }
  RelevanceScores scores;
  scores.per_doc.resize(corpus.num_documents());
  for (int d = 0; d < corpus.num_documents(); ++d) {
    const auto& tags = corpus.documents[d].tags;
    scores.per_doc[d].resize(tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) {
      auto it = by_doc[d].find(tags[i]);
      if (it == by_doc[d].end())
        throw DataError("missing score for a tag of " +
                        corpus.documents[d].image_id);
      scores.per_doc[d][i] = it->second;
    }
  }
  return scores;
}

void write_retag(const Corpus& corpus,
                 const std::vector<std::vector<int>>& retag_sets,
                 const std::vector<std::vector<double>>& vocab_scores,
                 const std::filesystem::path& path,
                 const std::vector<std::string>& header) {
  if (retag_sets.size() != std::size_t(corpus.num_documents()))
    throw DataError("retag sets do not cover the corpus");
  Writer w(path, header);
  for (int d = 0; d < corpus.num_documents(); ++d) {
    for (int tag : retag_sets[d]) {
      w.stream() << corpus.documents[d].image_id << '\t'
                 << corpus.vocabulary.word_of(tag) << '\t'
                 << fmt_double(vocab_scores[d][tag]) << '\n';
    }
  }
  w.close();
}

std::vector<std::vector<int>> load_retag(const std::filesystem::path& path,
                                         const Corpus& corpus) {
  LineReader reader(path);
  std::vector<std::vector<int>> sets(corpus.num_documents());
  std::string line;
  while (reader.next(line)) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) reader.fail("expected image_id<TAB>tag<TAB>score");
    int d = require_document(reader, corpus, fields[0]);
    int v = require_tag(reader, corpus, fields[1]);
    sets[d].push_back(v);
  }
  for (int d = 0; d < corpus.num_documents(); ++d)
    if (sets[d].empty())
      throw DataError("no retag entries for " + corpus.documents[d].image_id);
  return sets;
}

namespace {

void write_vector(std::ofstream& out, const char* name,
                  std::span<const double> values) {
  out << name;
  for (double x : values) out << ' ' << fmt_double(x);
  out << '\n';
}

std::vector<double> parse_vector(const LineReader& reader,
                                 const std::vector<std::string>& fields,
                                 std::size_t expected) {
  if (fields.size() != expected + 1)
    reader.fail("expected " + std::to_string(expected) + " values");
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i)
    out[i] = parse_double(reader, fields[i + 1]);
  return out;
}

}  // namespace

void save_lda_model(const LdaModel& model, const std::filesystem::path& path,
                    const std::vector<std::string>& header) {
  Writer w(path, header);
  auto& out = w.stream();
  out << "model lda\n";
  out << "topics " << model.num_topics << '\n';
  out << "vocab " << model.vocab_size << '\n';
  out << "seed " << model.seed << '\n';
  out << "iters " << model.em_iters_run << '\n';
  out << "converged " << (model.converged ? 1 : 0) << '\n';
  out << "elbo " << fmt_double(model.final_elbo) << '\n';
  write_vector(out, "alpha", model.alpha);
  for (int i = 0; i < model.num_topics; ++i)
    write_vector(out, "beta", model.beta_row(i));
  w.close();
}

namespace {

// shared keyword/value scaffolding for the two model formats
struct ModelFields {
  int topics = 0, vocab = 0, iters = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  double elbo = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;
};

void read_model_core(LineReader& reader, const std::string& kind,
                     ModelFields& mf,
                     const std::function<bool(const LineReader&,
                                              const std::vector<std::string>&)>&
                         extra) {
  std::string line;
  if (!reader.next(line)) reader.fail("missing model header");
  {
    auto fields = split(line, ' ');
    if (fields.size() != 2 || fields[0] != "model" || fields[1] != kind)
      reader.fail("expected 'model " + kind + "'");
  }
  while (reader.next(line)) {
    auto fields = split(line, ' ');
    const std::string& key = fields[0];
    if (fields.size() < 2) reader.fail("missing value for '" + key + "'");
    if (key == "topics") {
      mf.topics = int(parse_int(reader, fields.at(1)));
    } else if (key == "vocab") {
      mf.vocab = int(parse_int(reader, fields.at(1)));
    } else if (key == "seed") {
      mf.seed = std::uint64_t(std::strtoull(fields.at(1).c_str(), nullptr, 10));
    } else if (key == "iters") {
      mf.iters = int(parse_int(reader, fields.at(1)));
    } else if (key == "converged") {
      mf.converged = parse_int(reader, fields.at(1)) != 0;
    } else if (key == "elbo") {
      mf.elbo = parse_double(reader, fields.at(1));
    } else if (key == "alpha") {
      if (mf.topics < 1) reader.fail("alpha before topics");
      mf.alpha = parse_vector(reader, fields, mf.topics);
    } else if (key == "beta") {
      if (mf.topics < 1 || mf.vocab < 1) reader.fail("beta before dimensions");
      auto row = parse_vector(reader, fields, mf.vocab);
      mf.beta.insert(mf.beta.end(), row.begin(), row.end());
    } else if (!extra(reader, fields)) {
      reader.fail("unknown key '" + key + "'");
    }
  }
  if (mf.topics < 1 || mf.vocab < 1) reader.fail("missing dimensions");
  if (int(mf.alpha.size()) != mf.topics) reader.fail("missing alpha");
  if (int(mf.beta.size()) != mf.topics * mf.vocab)
    reader.fail("wrong number of beta rows");
}

}  // namespace

LdaModel load_lda_model(const std::filesystem::path& path) {
  LineReader reader(path);
  ModelFields mf;
  read_model_core(reader, "lda", mf, [](const auto&, const auto&) { return false; });
  LdaModel model;
  model.num_topics = mf.topics;
  model.vocab_size = mf.vocab;
  model.seed = mf.seed;
  model.em_iters_run = mf.iters;
  model.converged = mf.converged;
  model.final_elbo = mf.elbo;
  model.alpha = std::move(mf.alpha);
  model.beta = std::move(mf.beta);
  return model;
}

void save_rlda(const RldaModel& model, const RldaState& state,
               const Corpus& corpus, const std::filesystem::path& path,
               const std::vector<std::string>& header) {
  if (state.theta_bar.size() != std::size_t(corpus.num_documents()))
    throw DataError("state does not cover the corpus");
  Writer w(path, header);
  auto& out = w.stream();
  out << "model rlda\n";
  out << "topics " << model.num_topics << '\n';
  out << "vocab " << model.vocab_size << '\n';
  out << "seed " << state.seed << '\n';
  out << "iters " << state.iters_run << '\n';
  out << "converged " << (state.converged ? 1 : 0) << '\n';
  write_vector(out, "alpha", model.alpha);
  for (int i = 0; i < model.num_topics; ++i)
    write_vector(out, "beta",
                 std::span<const double>(
                     model.beta.data() + std::size_t(i) * model.vocab_size,
                     std::size_t(model.vocab_size)));
  out << "mu " << fmt_double(model.mu1) << ' ' << fmt_double(model.mu2) << '\n';
  out << "sigma " << fmt_double(model.sigma1) << ' ' << fmt_double(model.sigma2)
      << '\n';
  for (int d = 0; d < corpus.num_documents(); ++d) {
    out << "theta " << corpus.documents[d].image_id;
    for (double x : state.theta_bar[d]) out << ' ' << fmt_double(x);
    out << '\n';
  }
  w.close();
}

std::pair<RldaModel, RldaState> load_rlda(const std::filesystem::path& path,
                                          const Corpus& corpus) {
  LineReader reader(path);
  ModelFields mf;
  RldaModel model;
  bool have_mu = false, have_sigma = false;
  std::vector<std::vector<double>> theta(corpus.num_documents());
  std::vector<bool> seen(corpus.num_documents(), false);

  read_model_core(reader, "rlda", mf, [&](const LineReader& r,
                                          const std::vector<std::string>& fields) {
    const std::string& key = fields[0];
    if (key == "mu") {
      if (fields.size() != 3) r.fail("expected two mu values");
      model.mu1 = parse_double(r, fields[1]);
      model.mu2 = parse_double(r, fields[2]);
      have_mu = true;
      return true;
    }
    if (key == "sigma") {
      if (fields.size() != 3) r.fail("expected two sigma values");
      model.sigma1 = parse_double(r, fields[1]);
      model.sigma2 = parse_double(r, fields[2]);
      have_sigma = true;
      return true;
    }
    if (key == "theta") {
      if (mf.topics < 1) r.fail("theta before topics");
      if (fields.size() != std::size_t(mf.topics) + 2)
        r.fail("wrong theta arity");
      int d = corpus.find_document(fields[1]);
      if (d < 0) r.fail("unknown image_id '" + fields[1] + "'");
      if (seen[d]) r.fail("duplicate theta for '" + fields[1] + "'");
      theta[d].resize(mf.topics);
      for (int i = 0; i < mf.topics; ++i)
        theta[d][i] = parse_double(r, fields[i + 2]);
      seen[d] = true;
      return true;
    }
    return false;
  });

  if (!have_mu || !have_sigma) throw DataError("missing Gaussian parameters");
  for (int d = 0; d < corpus.num_documents(); ++d)
    if (!seen[d])
      throw DataError("missing theta for " + corpus.documents[d].image_id);

  model.num_topics = mf.topics;
  model.vocab_size = mf.vocab;
  model.alpha = std::move(mf.alpha);
  model.beta = std::move(mf.beta);

  RldaState state;
  state.seed = mf.seed;
  state.iters_run = mf.iters;
  state.converged = mf.converged;
  state.theta_bar = std::move(theta);
  return {std::move(model), std::move(state)};
}

}  // namespace tagref
