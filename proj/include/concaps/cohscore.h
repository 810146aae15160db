#ifndef CONCAPS_COHSCORE_H_
#define CONCAPS_COHSCORE_H_

// Horizontal coherence metrics. A metric model is a checkpoint trained with
// only one horizontal objective: (0, 0, 1, 0) for variant 1 and (0, 0, 0, 1)
// for variant 2. A document's score is the mean raw logit of that head over
// its image pairs, earlier image first.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concaps/corpus.h"
#include "concaps/model.h"

namespace concaps {

enum class PairMode { kAll, kWithinWindow };

PairMode parse_pair_mode(std::string_view name);

// Throws kConfig when the model's lambdas do not define the variant.
void check_metric_model(const CaptionModel& model, int variant);

// nullopt when the document has no scorable pair.
std::optional<double> document_coh_score(const CaptionModel& model, int variant, const Document& doc,
                                         const std::vector<Tokens>& captions,
                                         const InputSource& source, PairMode mode,
                                         int window_tokens);

struct CohScoreResult {
  double mean = 0.0;
  std::map<std::string, double> per_document;
};

// captions maps doc_id to one caption per image; documents absent from the
// map are skipped, and so are documents without pairs.
CohScoreResult hori_coh_score(const CaptionModel& model, int variant, const Corpus& corpus,
                              const std::map<std::string, std::vector<Tokens>>& captions,
                              const InputSource& source, PairMode mode, int window_tokens);

// The corpus's own captions, keyed by doc_id.
std::map<std::string, std::vector<Tokens>> reference_captions(const Corpus& corpus);

}  // namespace concaps

#endif  // CONCAPS_COHSCORE_H_
