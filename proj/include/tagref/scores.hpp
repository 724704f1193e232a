#pragma once

#include <vector>

namespace tagref {

// Per-document tag scores. per_doc[d][i] is the score of
// corpus.documents[d].tags[i]; rows produced by the random-walk family are
// probability distributions over the document's tags.
struct RelevanceScores {
  std::vector<std::vector<double>> per_doc;
};

}  // namespace tagref
