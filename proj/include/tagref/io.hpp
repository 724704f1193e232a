#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tagref/corpus.hpp"
#include "tagref/eval.hpp"
#include "tagref/lda.hpp"
#include "tagref/rlda.hpp"
#include "tagref/scores.hpp"

namespace tagref {

// All readers skip blank lines and '#' comment lines, and report malformed
// records as "path:line: message".

// one record per line: image_id <TAB> comma-separated tags
Corpus load_documents(const std::filesystem::path& path);

// image_id <TAB> space-separated floats; every document needs a row
void attach_features(Corpus& corpus, const std::filesystem::path& path);

// id_a <TAB> id_b <TAB> similarity in (0, 1]; values at or below the
// threshold are rejected
void attach_similarities(Corpus& corpus, const std::filesystem::path& path,
                         double threshold = 0.2);

// image_id <TAB> tag <TAB> grade in 1..5
RelevanceLabels load_labels(const std::filesystem::path& path,
                            const Corpus& corpus);

// tag <TAB> comma-separated image ids
GroundTruthSets load_truth_sets(const std::filesystem::path& path,
                                const Corpus& corpus);

void write_documents(const Corpus& corpus, const std::filesystem::path& path,
                     const std::vector<std::string>& header);
void write_similarities(const Corpus& corpus, const std::filesystem::path& path,
                        const std::vector<std::string>& header);
void write_labels(const Corpus& corpus, const RelevanceLabels& labels,
                  const std::filesystem::path& path,
                  const std::vector<std::string>& header);
void write_truth_sets(const Corpus& corpus, const GroundTruthSets& sets,
                      const std::filesystem::path& path,
                      const std::vector<std::string>& header);

// image_id <TAB> tag <TAB> score; documents in corpus order, tags in
// descending score with ties keeping the document order
void write_scores(const Corpus& corpus, const RelevanceScores& scores,
                  const std::filesystem::path& path,
                  const std::vector<std::string>& header);
RelevanceScores load_scores(const std::filesystem::path& path,
                            const Corpus& corpus);

// same line format; top-k tags per document in descending score
void write_retag(const Corpus& corpus,
                 const std::vector<std::vector<int>>& retag_sets,
                 const std::vector<std::vector<double>>& vocab_scores,
                 const std::filesystem::path& path,
                 const std::vector<std::string>& header);
std::vector<std::vector<int>> load_retag(const std::filesystem::path& path,
                                         const Corpus& corpus);

void save_lda_model(const LdaModel& model, const std::filesystem::path& path,
                    const std::vector<std::string>& header);
LdaModel load_lda_model(const std::filesystem::path& path);

void save_rlda(const RldaModel& model, const RldaState& state,
               const Corpus& corpus, const std::filesystem::path& path,
               const std::vector<std::string>& header);
std::pair<RldaModel, RldaState> load_rlda(const std::filesystem::path& path,
                                          const Corpus& corpus);

}  // namespace tagref
