#ifndef CONCAPS_DECODE_H_
#define CONCAPS_DECODE_H_

// Two-level beam search.
//
// Level one runs a word-level beam search per image and keeps the C best
// captions by length-normalized log-probability; each candidate is then
// rescored with the vertical coherence head. Level two searches over caption
// combinations for the W images of a window, scoring a partial sequence by
// its mean single-caption score plus the mean pairwise horizontal logit.

#include <functional>
#include <span>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/model.h"

namespace concaps {

struct CaptionHypothesis {
  std::vector<int> tokens;  // generated ids after <s>; ends with </s> unless cut at max_len
  double gen_score = 0.0;   // mean log-probability per generated token
  double vert_score = 0.0;
  double single_score = 0.0;
  RowVector end_state;  // set by vert_rescore
};

// Anything that can propose a next-token distribution.
class NextTokenModel {
 public:
  virtual ~NextTokenModel() = default;
  virtual int vocab_size() const = 0;
  // log p(next | prefix); prefix starts with <s>. Impossible tokens are -inf.
  virtual RowVector next_log_probs(std::span<const int> prefix) const = 0;
};

class EndStateModel {
 public:
  virtual ~EndStateModel() = default;
  // caption is <s> ... </s>.
  virtual RowVector end_state(std::span<const int> caption) const = 0;
};

// A CaptionModel bound to one image's encoded inputs.
class ModelStepper final : public NextTokenModel, public EndStateModel {
 public:
  ModelStepper(const CaptionModel& model, const ModelInput& input);

  int vocab_size() const override { return model_.vocab().size(); }
  RowVector next_log_probs(std::span<const int> prefix) const override;
  RowVector end_state(std::span<const int> caption) const override;

 private:
  const CaptionModel& model_;
  Matrix memory_;
};

struct BeamOptions {
  int beam_size = 3;
  int num_candidates = 3;  // C
  int max_len = 20;        // generated tokens, </s> included
};

struct BeamResult {
  std::vector<CaptionHypothesis> hypotheses;  // best first
  bool truncated = false;  // fewer than C finished hypotheses existed
};

// Ties are broken by lexicographic token order.
BeamResult word_beam_search(const NextTokenModel& model, const BeamOptions& options);

struct ScoreWeights {
  double gen = 1.0;
  double vert = 1.0;
  double hori = 1.0;
};

using VertScoreFn = std::function<double(const RowVector& end_state)>;
using HoriScoreFn = std::function<double(const RowVector& first, const RowVector& second)>;

// <s> tokens [</s> if missing]
std::vector<int> closed_caption(std::span<const int> tokens);

// Sets end_state, vert_score (0 when vert is empty) and
// single_score = gen_weight * gen_score + vert_weight * vert_score.
CaptionHypothesis vert_rescore(CaptionHypothesis hyp, const EndStateModel& model,
                               const VertScoreFn& vert, const ScoreWeights& weights = {});

struct CaptionSequence {
  std::vector<int> choice;  // candidate index per image
  std::vector<CaptionHypothesis> chosen;
  double mean_single = 0.0;
  double hori_score = 0.0;  // mean pairwise logit; 0 for a single caption
  double seq_score = 0.0;   // mean_single + hori_weight * hori_score
};

// Scores a fixed combination; hori may be empty (no horizontal term).
CaptionSequence score_sequence(const std::vector<std::vector<CaptionHypothesis>>& per_image,
                               const std::vector<int>& choice, const HoriScoreFn& hori,
                               const ScoreWeights& weights = {});

CaptionSequence caption_beam_search(const std::vector<std::vector<CaptionHypothesis>>& per_image,
                                    const HoriScoreFn& hori, int beam_size,
                                    const ScoreWeights& weights = {});

}  // namespace concaps

#endif  // CONCAPS_DECODE_H_
