#include "concaps/cohscore.h"

#include "concaps/decode.h"
#include "concaps/errors.h"

namespace concaps {

PairMode parse_pair_mode(std::string_view name) {
  if (name == "all") return PairMode::kAll;
  if (name == "within-window") return PairMode::kWithinWindow;
  fail(ErrorKind::kConfig, "pairs must be 'all' or 'within-window'");
}

void check_metric_model(const CaptionModel& model, int variant) {
  const CoherenceConfig& c = model.spec().coherence;
  bool ok = false;
  if (variant == 1)
    ok = c.lambda_gen == 0 && c.lambda_vert == 0 && c.lambda_hori1 == 1 && c.lambda_hori2 == 0;
  else if (variant == 2)
    ok = c.lambda_gen == 0 && c.lambda_vert == 0 && c.lambda_hori1 == 0 && c.lambda_hori2 == 1;
  else
    fail(ErrorKind::kConfig, "coherence variant must be 1 or 2");
  if (!ok)
    fail(ErrorKind::kConfig, "checkpoint lambdas do not match coherence variant " +
                                 std::to_string(variant));
}

std::optional<double> document_coh_score(const CaptionModel& model, int variant, const Document& doc,
                                         const std::vector<Tokens>& captions,
                                         const InputSource& source, PairMode mode,
                                         int window_tokens) {
  check_metric_model(model, variant);
  if (captions.size() != doc.images.size())
    fail(ErrorKind::kValidation, "document " + doc.doc_id + " needs one caption per image");
  if (doc.images.size() < 2) return std::nullopt;

  const size_t limit = static_cast<size_t>(model.spec().model.max_len - 2);
  std::vector<RowVector> states;
  for (size_t k = 0; k < doc.images.size(); ++k) {
    const Tokens text = extract_context_window(doc, static_cast<int>(k + 1), window_tokens);
    const ModelStepper stepper(model, source.make(text, doc.images[k].feature_key));
    std::vector<int> ids = model.vocab().encode(captions[k]);
    if (ids.size() > limit) ids.resize(limit);
    states.push_back(stepper.end_state(closed_caption(ids)));
  }

  const PairScorer& scorer = variant == 1 ? model.hori1_scorer() : model.hori2_scorer();
  const size_t gap = static_cast<size_t>(model.spec().coherence.window - 1);
  double total = 0.0;
  int pairs = 0;
  for (size_t i = 0; i < states.size(); ++i)
    for (size_t j = i + 1; j < states.size(); ++j) {
      if (mode == PairMode::kWithinWindow && j - i > gap) continue;
      RowVector joined(states[i].size() + states[j].size());
      joined << states[i], states[j];
      total += scorer.score(joined);
      ++pairs;
    }
  if (pairs == 0) return std::nullopt;
  return total / pairs;
}

CohScoreResult hori_coh_score(const CaptionModel& model, int variant, const Corpus& corpus,
                              const std::map<std::string, std::vector<Tokens>>& captions,
                              const InputSource& source, PairMode mode, int window_tokens) {
  check_metric_model(model, variant);
  CohScoreResult out;
  double total = 0.0;
  for (const Document& doc : corpus) {
    auto it = captions.find(doc.doc_id);
    if (it == captions.end()) continue;
    const auto score = document_coh_score(model, variant, doc, it->second, source, mode, window_tokens);
    if (!score) continue;
    out.per_document[doc.doc_id] = *score;
    total += *score;
  }
  if (!out.per_document.empty()) out.mean = total / static_cast<double>(out.per_document.size());
  return out;
}

std::map<std::string, std::vector<Tokens>> reference_captions(const Corpus& corpus) {
  std::map<std::string, std::vector<Tokens>> out;
  for (const Document& doc : corpus)
    for (const ImageRecord& img : doc.images) out[doc.doc_id].push_back(img.caption);
  return out;
}

}  // namespace concaps
