#include "tagref/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tagref/corpus.hpp"
#include "tagref/error.hpp"
#include "tagref/eval.hpp"
#include "tagref/io.hpp"
#include "tagref/lda.hpp"
#include "tagref/randwalk.hpp"
#include "tagref/rlda.hpp"
#include "tagref/scores.hpp"
#include "tagref/synth.hpp"
#include "tagref/util.hpp"

namespace tagref {

namespace {

namespace fs = std::filesystem;

struct CliConfig {
  std::string docs, features, similarities, labels, truth_sets;
  std::string scores, retag_file, model, out;
  std::string method = "baseline";
  int topics = 10;
  double lambda = 0.5;
  double threshold = 0.2;
  int samples = 2000;
  int outer_iters = 30;
  int em_iters = 50;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  int threads = 1;
  int top_k = 5;

  // synth-only knobs
  int vocab = 60;
  int num_docs = 300;
  int doc_len_min = 6;
  int doc_len_max = 10;
  double alpha = 0.3;
  double block_mass = 0.9;
  double edge_rate = 0.05;
  double noise = 0.05;
  double mu1 = 0.8, mu2 = 0.2;
  double sigma1 = 0.1, sigma2 = 0.1;
};

std::string kv(const std::string& key, const std::string& value) {
  return value.empty() ? std::string() : ' ' + key + '=' + value;
}

std::vector<std::string> provenance(const std::string& subcommand,
                                    const CliConfig& cfg,
                                    const std::string& extra = "") {
  std::ostringstream cf;
  cf << "config" << kv("docs", cfg.docs) << kv("features", cfg.features)
     << kv("similarities", cfg.similarities) << kv("labels", cfg.labels)
     << kv("truth-sets", cfg.truth_sets) << kv("scores", cfg.scores)
     << kv("retag-file", cfg.retag_file) << kv("model", cfg.model)
     << kv("out", cfg.out) << extra;
  std::ostringstream params;
  params << "params method=" << cfg.method << " topics=" << cfg.topics
         << " lambda=" << fmt_double(cfg.lambda)
         << " threshold=" << fmt_double(cfg.threshold)
         << " samples=" << cfg.samples << " outer-iters=" << cfg.outer_iters
         << " em-iters=" << cfg.em_iters << " tol=" << fmt_double(cfg.tol)
         << " seed=" << cfg.seed << " threads=" << cfg.threads
         << " top-k=" << cfg.top_k;
  return {"tagref " + subcommand + " v" + kVersion, cf.str(), params.str()};
}

Corpus load_corpus_inputs(const CliConfig& cfg, bool need_visual) {
  if (cfg.docs.empty()) throw UsageError("--docs is required");
  Corpus corpus = load_documents(cfg.docs);
  if (!cfg.features.empty()) attach_features(corpus, cfg.features);
  if (!cfg.similarities.empty())
    attach_similarities(corpus, cfg.similarities, cfg.threshold);
  if (need_visual && !corpus.features && !corpus.graph)
    throw UsageError("method needs --features or --similarities");
  return corpus;
}

LdaFitOptions lda_options(const CliConfig& cfg) {
  LdaFitOptions opts;
  opts.em_iters = cfg.em_iters;
  opts.var_tol = cfg.tol;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  return opts;
}

RldaFitOptions rlda_options(const CliConfig& cfg) {
  RldaFitOptions opts;
  opts.outer_iters = cfg.outer_iters;
  opts.n_samples = cfg.samples;
  opts.seed = cfg.seed;
  opts.lda_em_iters = cfg.em_iters;
  opts.threads = cfg.threads;
  return opts;
}

// graph wanted but only features given: build it
void ensure_graph(Corpus& corpus, const CliConfig& cfg) {
  if (!corpus.graph) {
    if (!corpus.features)
      throw UsageError("rlda needs --similarities or --features");
    corpus.graph = build_similarity_graph(corpus, cfg.threshold);
  }
}

struct MethodScores {
  RelevanceScores scores;
  // full-vocabulary relevance per document, only for lda/rlda
  std::vector<std::vector<double>> vocab_scores;
  bool partial = false;  // some documents carry a non-converged iterate
};

MethodScores scores_for_method(Corpus& corpus, const CliConfig& cfg) {
  MethodScores out;
  const int m = corpus.num_documents();
  out.scores.per_doc.assign(m, {});

  auto salvage_per_doc = [&](auto&& per_doc_fn) {
    for (int d = 0; d < m; ++d) {
      const auto& doc = corpus.documents[d];
      if (doc.tags.empty()) continue;
      try {
        out.scores.per_doc[d] = per_doc_fn(d);
      } catch (const ConvergenceError& e) {
        if (e.partial.empty()) throw;
        out.scores.per_doc[d] = e.partial.front();
        out.partial = true;
      }
    }
  };

  if (cfg.method == "baseline") {
    for (int d = 0; d < m; ++d) {
      std::size_t n = corpus.documents[d].tags.size();
      if (n > 0) out.scores.per_doc[d].assign(n, 1.0 / double(n));
    }
  } else if (cfg.method == "rwr") {
    auto sim = cooccurrence_similarity(corpus);
    salvage_per_doc([&](int d) {
      return stationary_distribution(
          tag_transition_matrix(corpus.documents[d], sim));
    });
  } else if (cfg.method == "visual" || cfg.method == "two-step" ||
             cfg.method == "joint") {
    if (!corpus.features && !corpus.graph)
      throw UsageError("method needs --features or --similarities");
    auto sim = cooccurrence_similarity(corpus);
    double lambda = cfg.method == "visual" ? 0.0 : cfg.lambda;
    if (cfg.method == "joint") {
      JointOptions jopts;
      jopts.threads = cfg.threads;
      try {
        out.scores = joint_refinement(corpus, sim, lambda, jopts);
      } catch (const ConvergenceError& e) {
        out.scores.per_doc = e.partial;
        out.partial = true;
      }
    } else {
      out.scores = two_step_refine(corpus, sim, lambda, cfg.threads);
    }
  } else if (cfg.method == "lda") {
    LdaModel model = cfg.model.empty() ? fit_lda(corpus, cfg.topics, lda_options(cfg))
                                       : load_lda_model(cfg.model);
    if (model.vocab_size != corpus.vocabulary.size())
      throw DataError("model vocabulary does not match the corpus");
    out.vocab_scores.assign(m, {});
    for (int d = 0; d < m; ++d) {
      const auto& doc = corpus.documents[d];
      if (doc.tags.empty()) continue;
      auto vp = var_inference(doc, model, cfg.tol);
      out.vocab_scores[d] = lda_tag_relevance(model, vp);
      out.scores.per_doc[d].reserve(doc.tags.size());
      for (int tag : doc.tags)
        out.scores.per_doc[d].push_back(out.vocab_scores[d][tag]);
    }
  } else if (cfg.method == "rlda") {
    RldaModel model;
    RldaState state;
    if (cfg.model.empty()) {
      ensure_graph(corpus, cfg);
      std::tie(model, state) = fit_rlda(corpus, cfg.topics, rlda_options(cfg));
    } else {
      std::tie(model, state) = load_rlda(cfg.model, corpus);
    }
    if (model.vocab_size != corpus.vocabulary.size())
      throw DataError("model vocabulary does not match the corpus");
    out.vocab_scores.assign(m, {});
    for (int d = 0; d < m; ++d) {
      const auto& doc = corpus.documents[d];
      if (doc.tags.empty()) continue;
      out.vocab_scores[d] = rlda_tag_relevance(state.theta_bar[d], model);
      out.scores.per_doc[d].reserve(doc.tags.size());
      for (int tag : doc.tags)
        out.scores.per_doc[d].push_back(out.vocab_scores[d][tag]);
    }
  } else {
    throw UsageError("unknown method '" + cfg.method + "'");
  }
  return out;
}

int cmd_synth(const CliConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out directory is required");
  SynthSpec spec;
  spec.num_topics = cfg.topics;
  spec.vocab_size = cfg.vocab;
  spec.num_docs = cfg.num_docs;
  spec.doc_len_min = cfg.doc_len_min;
  spec.doc_len_max = cfg.doc_len_max;
  spec.alpha_true = symmetric_alpha(cfg.topics, cfg.alpha);
  spec.beta_true = block_beta(cfg.topics, cfg.vocab, cfg.block_mass);
  spec.mu1 = cfg.mu1;
  spec.mu2 = cfg.mu2;
  spec.sigma1 = cfg.sigma1;
  spec.sigma2 = cfg.sigma2;
  spec.edge_rate = cfg.edge_rate;
  spec.noise = cfg.noise;
  spec.edge_threshold = cfg.threshold;
  spec.seed = cfg.seed;

  auto [corpus, truth] = generate(spec);
  auto sets = true_tag_sets(corpus, spec, truth, cfg.top_k);

  fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::ostringstream extra;
  extra << " vocab=" << cfg.vocab << " num-docs=" << cfg.num_docs
        << " doc-len=" << cfg.doc_len_min << ":" << cfg.doc_len_max
        << " alpha=" << fmt_double(cfg.alpha)
        << " block-mass=" << fmt_double(cfg.block_mass)
        << " edge-rate=" << fmt_double(cfg.edge_rate)
        << " noise=" << fmt_double(cfg.noise) << " mu=" << fmt_double(cfg.mu1)
        << "," << fmt_double(cfg.mu2) << " sigma=" << fmt_double(cfg.sigma1)
        << "," << fmt_double(cfg.sigma2);
  auto header = provenance("synth", cfg, extra.str());
  write_documents(corpus, dir / "documents.tsv", header);
  write_similarities(corpus, dir / "similarities.tsv", header);
  write_labels(corpus, truth.labels, dir / "labels.tsv", header);
  write_truth_sets(corpus, sets, dir / "truth_sets.tsv", header);
  std::ofstream echo(dir / "spec.txt");
  for (const auto& line : header) echo << line << '\n';
  return 0;
}

int cmd_train_lda(const CliConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out is required");
  Corpus corpus = load_corpus_inputs(cfg, false);
  LdaModel model = fit_lda(corpus, cfg.topics, lda_options(cfg));
  if (!model.converged)
    std::fprintf(stderr, "note: EM stopped at the iteration cap\n");
  save_lda_model(model, cfg.out, provenance("train-lda", cfg));
  return 0;
}

int cmd_train_rlda(const CliConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out is required");
  Corpus corpus = load_corpus_inputs(cfg, true);
  ensure_graph(corpus, cfg);
  auto [model, state] = fit_rlda(corpus, cfg.topics, rlda_options(cfg));
  if (state.ess_warnings > 0)
    std::fprintf(stderr, "note: %d low effective-sample-size warnings\n",
                 state.ess_warnings);
  if (!state.converged)
    std::fprintf(stderr, "note: sampler stopped at the iteration cap\n");
  save_rlda(model, state, corpus, cfg.out, provenance("train-rlda", cfg));
  return 0;
}

int cmd_rerank(const CliConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out is required");
  bool needs_visual = cfg.method == "visual" || cfg.method == "two-step" ||
                      cfg.method == "joint";
  Corpus corpus = load_corpus_inputs(cfg, needs_visual);
  MethodScores result = scores_for_method(corpus, cfg);
  write_scores(corpus, result.scores, cfg.out, provenance("rerank", cfg));
  return result.partial ? 3 : 0;
}

int cmd_retag(const CliConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out is required");
  if (cfg.method != "lda" && cfg.method != "rlda")
    throw UsageError("only lda and rlda produce full-vocabulary scores");
  Corpus corpus = load_corpus_inputs(cfg, cfg.method == "rlda");
  MethodScores result = scores_for_method(corpus, cfg);
  std::vector<std::vector<int>> sets(corpus.num_documents());
  for (int d = 0; d < corpus.num_documents(); ++d) {
    if (result.vocab_scores[d].empty()) continue;
    sets[d] = retag(result.vocab_scores[d], cfg.top_k);
  }
  write_retag(corpus, sets, result.vocab_scores, cfg.out,
              provenance("retag", cfg));
  return 0;
}

int cmd_eval(const CliConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("--out is required");
  if (cfg.labels.empty()) throw UsageError("--labels is required");
  if (cfg.scores.empty() && cfg.retag_file.empty())
    throw UsageError("provide --scores and/or --retag-file");
  if (!cfg.retag_file.empty() && cfg.truth_sets.empty())
    throw UsageError("--retag-file needs --truth-sets");

  Corpus corpus = load_corpus_inputs(cfg, false);
  RelevanceLabels labels = load_labels(cfg.labels, corpus);

  std::vector<std::pair<std::string, double>> metrics;
  if (!cfg.scores.empty()) {
    RelevanceScores scores = load_scores(cfg.scores, corpus);
    int max_tags = 0;
    for (const auto& doc : corpus.documents)
      max_tags = std::max(max_tags, int(doc.tags.size()));
    for (int n : {1, 3, 5}) {
      if (n <= max_tags)
        metrics.emplace_back("ndcg@" + std::to_string(n),
                             mean_ndcg(corpus, labels, scores, n));
    }
    metrics.emplace_back("ndcg@full",
                         mean_ndcg(corpus, labels, scores, max_tags));

    std::vector<std::vector<int>> rankings(corpus.num_documents());
    for (int d = 0; d < corpus.num_documents(); ++d)
      if (!corpus.documents[d].tags.empty())
        rankings[d] = rerank(corpus.documents[d], scores.per_doc[d]);
    auto hist = position_histogram(corpus, labels, rankings);
    for (std::size_t p = 0; p < hist.size(); ++p)
      metrics.emplace_back("position@" + std::to_string(p + 1), hist[p]);
  }
  if (!cfg.retag_file.empty()) {
    auto sets = load_retag(cfg.retag_file, corpus);
    auto truth = load_truth_sets(cfg.truth_sets, corpus);
    auto fm = retrieval_f_measure(corpus, sets, truth);
    metrics.emplace_back("fmeasure_mean", fm.mean);
    for (const auto& [tag, f] : fm.per_tag)
      metrics.emplace_back("fmeasure[" + corpus.vocabulary.word_of(tag) + "]", f);
  }

  auto header = provenance("eval", cfg);
  header.push_back("metric<TAB>value records follow");
  std::ofstream out(cfg.out);
  if (!out) throw DataError("cannot write " + cfg.out);
  for (const auto& line : header) out << "# " << line << '\n';
  for (const auto& [name, value] : metrics)
    out << name << '\t' << fmt_double(value) << '\n';
  out.close();
  if (!out) throw DataError("write failed: " + cfg.out);
  for (const auto& [name, value] : metrics)
    std::printf("%-16s %.6f\n", name.c_str(), value);
  return 0;
}

void add_common_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--docs", cfg.docs, "documents file");
  cmd->add_option("--features", cfg.features, "feature vectors file");
  cmd->add_option("--similarities", cfg.similarities, "similarity edges file");
  cmd->add_option("--labels", cfg.labels, "relevance labels file");
  cmd->add_option("--truth-sets", cfg.truth_sets, "ground-truth sets file");
  cmd->add_option("--scores", cfg.scores, "scores file produced by rerank");
  cmd->add_option("--retag-file", cfg.retag_file, "retag file produced by retag");
  cmd->add_option("--model", cfg.model, "serialized model file");
  cmd->add_option("--out", cfg.out, "output path");
  cmd->add_option("--method", cfg.method,
                  "baseline|rwr|visual|two-step|joint|lda|rlda");
  cmd->add_option("--topics", cfg.topics, "number of latent topics")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", cfg.lambda, "restart mixing weight")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--threshold", cfg.threshold, "similarity edge threshold")
      ->check(CLI::Range(0.0, 0.999999));
  cmd->add_option("--samples", cfg.samples, "importance samples per document")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--outer-iters", cfg.outer_iters, "sampler outer iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--em-iters", cfg.em_iters, "EM iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", cfg.tol, "variational convergence tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--threads", cfg.threads, "worker threads (1 = serial)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--top-k", cfg.top_k, "retag set size")
      ->check(CLI::PositiveNumber);
}

void add_synth_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--vocab", cfg.vocab, "vocabulary size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--num-docs", cfg.num_docs, "number of documents")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--doc-len-min", cfg.doc_len_min, "min tags per document")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--doc-len-max", cfg.doc_len_max, "max tags per document")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", cfg.alpha, "symmetric Dirichlet parameter")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--block-mass", cfg.block_mass,
                  "topic mass on its own word block");
  cmd->add_option("--edge-rate", cfg.edge_rate, "pair sampling rate")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--noise", cfg.noise, "uniform similarity jitter width");
  cmd->add_option("--mu1", cfg.mu1, "same-content similarity mean");
  cmd->add_option("--mu2", cfg.mu2, "different-content similarity mean");
  cmd->add_option("--sigma1", cfg.sigma1, "same-content similarity std");
  cmd->add_option("--sigma2", cfg.sigma2, "different-content similarity std");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"tag relevance estimation and refinement"};
  app.require_subcommand(1);
  CliConfig cfg;

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* train_lda_cmd = app.add_subcommand("train-lda", "fit an LDA model");
  auto* train_rlda_cmd = app.add_subcommand("train-rlda", "fit an rLDA model");
  auto* rerank_cmd = app.add_subcommand("rerank", "reorder document tags");
  auto* retag_cmd = app.add_subcommand("retag", "assign top-k tags per image");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate rankings and retag sets");
  for (auto* cmd :
       {synth_cmd, train_lda_cmd, train_rlda_cmd, rerank_cmd, retag_cmd, eval_cmd})
    add_common_flags(cmd, cfg);
  add_synth_flags(synth_cmd, cfg);

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) return cmd_synth(cfg);
    if (train_lda_cmd->parsed()) return cmd_train_lda(cfg);
    if (train_rlda_cmd->parsed()) return cmd_train_rlda(cfg);
    if (rerank_cmd->parsed()) return cmd_rerank(cfg);
    if (retag_cmd->parsed()) return cmd_retag(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    throw UsageError("no subcommand given");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "non-convergence: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  }
}

}  // namespace tagref
