#include "concaps/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "concaps/errors.h"
#include "concaps/text.h"

namespace concaps {

ModelStepper::ModelStepper(const CaptionModel& model, const ModelInput& input) : model_(model) {
  Tape tape(false);
  memory_ = model.memory(tape, input).value();
}

RowVector ModelStepper::next_log_probs(std::span<const int> prefix) const {
  Tape tape(false);
  const Var memory = tape.constant(memory_);
  const DecoderOutput out = model_.decode(tape, prefix, memory);
  const Matrix& logits = out.logits.value();
  const RowVector last = logits.row(logits.rows() - 1);
  return log_softmax(last, kNeverPredicted);
}

RowVector ModelStepper::end_state(std::span<const int> caption) const {
  Tape tape(false);
  const Var memory = tape.constant(memory_);
  const DecoderOutput out = model_.decode(tape, caption, memory);
  return concaps::end_state(out, caption).value().row(0);
}

namespace {

struct Partial {
  std::vector<int> tokens;
  double log_prob = 0.0;
};

bool better_partial(const Partial& a, const Partial& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

bool better_hypothesis(const CaptionHypothesis& a, const CaptionHypothesis& b) {
  if (a.gen_score != b.gen_score) return a.gen_score > b.gen_score;
  return a.tokens < b.tokens;
}

}  // namespace

BeamResult word_beam_search(const NextTokenModel& model, const BeamOptions& options) {
  if (options.beam_size < 1) fail(ErrorKind::kConfig, "beam size must be positive");
  if (options.num_candidates < 1) fail(ErrorKind::kConfig, "candidate count must be positive");
  if (options.max_len < 1) fail(ErrorKind::kConfig, "max_len must be positive");

  std::vector<Partial> live = {Partial{}};
  std::vector<Partial> finished;
  std::vector<int> prefix;
  for (int step = 1; step <= options.max_len && !live.empty(); ++step) {
    std::vector<Partial> expansions;
    for (const Partial& beam : live) {
      prefix.assign(1, Vocab::kBos);
      prefix.insert(prefix.end(), beam.tokens.begin(), beam.tokens.end());
      const RowVector lp = model.next_log_probs(prefix);
      if (lp.size() != model.vocab_size())
        fail(ErrorKind::kContract, "next-token distribution has the wrong width");
      for (int tok = 0; tok < lp.size(); ++tok) {
        if (!std::isfinite(lp[tok])) continue;
        Partial next{beam.tokens, beam.log_prob + lp[tok]};
        next.tokens.push_back(tok);
        expansions.push_back(std::move(next));
      }
    }
    std::sort(expansions.begin(), expansions.end(), better_partial);
    if (expansions.size() > static_cast<size_t>(options.beam_size))
      expansions.resize(options.beam_size);
    live.clear();
    for (Partial& p : expansions) {
      if (p.tokens.back() == Vocab::kEos || step == options.max_len)
        finished.push_back(std::move(p));
      else
        live.push_back(std::move(p));
    }
  }

  BeamResult result;
  for (Partial& p : finished) {
    CaptionHypothesis h;
    h.gen_score = p.log_prob / static_cast<double>(p.tokens.size());
    h.tokens = std::move(p.tokens);
    h.single_score = h.gen_score;
    result.hypotheses.push_back(std::move(h));
  }
  std::sort(result.hypotheses.begin(), result.hypotheses.end(), better_hypothesis);
  if (result.hypotheses.size() > static_cast<size_t>(options.num_candidates))
    result.hypotheses.resize(options.num_candidates);
  result.truncated = result.hypotheses.size() < static_cast<size_t>(options.num_candidates);
  return result;
}

std::vector<int> closed_caption(std::span<const int> tokens) {
  std::vector<int> out;
  out.reserve(tokens.size() + 2);
  out.push_back(Vocab::kBos);
  out.insert(out.end(), tokens.begin(), tokens.end());
  if (tokens.empty() || tokens.back() != Vocab::kEos) out.push_back(Vocab::kEos);
  return out;
}

CaptionHypothesis vert_rescore(CaptionHypothesis hyp, const EndStateModel& model,
                               const VertScoreFn& vert, const ScoreWeights& weights) {
  hyp.end_state = model.end_state(closed_caption(hyp.tokens));
  hyp.vert_score = vert ? vert(hyp.end_state) : 0.0;
  hyp.single_score = weights.gen * hyp.gen_score + weights.vert * hyp.vert_score;
  return hyp;
}

CaptionSequence score_sequence(const std::vector<std::vector<CaptionHypothesis>>& per_image,
                               const std::vector<int>& choice, const HoriScoreFn& hori,
                               const ScoreWeights& weights) {
  if (choice.empty() || choice.size() > per_image.size())
    fail(ErrorKind::kContract, "caption choice does not match the window");
  CaptionSequence seq;
  seq.choice = choice;
  double single = 0.0;
  for (size_t i = 0; i < choice.size(); ++i) {
    const auto& cands = per_image[i];
    if (choice[i] < 0 || static_cast<size_t>(choice[i]) >= cands.size())
      fail(ErrorKind::kIndex, "candidate index out of range");
    seq.chosen.push_back(cands[choice[i]]);
    single += cands[choice[i]].single_score;
  }
  seq.mean_single = single / static_cast<double>(choice.size());
  if (hori && choice.size() > 1) {
    double total = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < seq.chosen.size(); ++i)
      for (size_t j = i + 1; j < seq.chosen.size(); ++j) {
        total += hori(seq.chosen[i].end_state, seq.chosen[j].end_state);
        ++pairs;
      }
    seq.hori_score = total / pairs;
  }
  seq.seq_score = seq.mean_single + weights.hori * seq.hori_score;
  return seq;
}

namespace {

std::vector<std::vector<int>> chosen_tokens(const CaptionSequence& s) {
  std::vector<std::vector<int>> out;
  for (const auto& h : s.chosen) out.push_back(h.tokens);
  return out;
}

bool better_sequence(const CaptionSequence& a, const CaptionSequence& b) {
  if (a.seq_score != b.seq_score) return a.seq_score > b.seq_score;
  return chosen_tokens(a) < chosen_tokens(b);
}

}  // namespace

CaptionSequence caption_beam_search(const std::vector<std::vector<CaptionHypothesis>>& per_image,
                                    const HoriScoreFn& hori, int beam_size,
                                    const ScoreWeights& weights) {
  if (per_image.empty()) fail(ErrorKind::kContract, "no images to caption");
  if (beam_size < 1) fail(ErrorKind::kConfig, "beam size must be positive");
  for (const auto& cands : per_image)
    if (cands.empty()) fail(ErrorKind::kContract, "an image has no caption candidates");

  std::vector<CaptionSequence> beams;
  for (size_t c = 0; c < per_image[0].size(); ++c)
    beams.push_back(score_sequence(per_image, {static_cast<int>(c)}, hori, weights));
  std::sort(beams.begin(), beams.end(), better_sequence);
  if (beams.size() > static_cast<size_t>(beam_size)) beams.resize(beam_size);

  for (size_t i = 1; i < per_image.size(); ++i) {
    std::vector<CaptionSequence> next;
    for (const CaptionSequence& b : beams)
      for (size_t c = 0; c < per_image[i].size(); ++c) {
        std::vector<int> choice = b.choice;
        choice.push_back(static_cast<int>(c));
        next.push_back(score_sequence(per_image, choice, hori, weights));
      }
    std::sort(next.begin(), next.end(), better_sequence);
    if (next.size() > static_cast<size_t>(beam_size)) next.resize(beam_size);
    beams = std::move(next);
  }
  return beams.front();
}

}  // namespace concaps
