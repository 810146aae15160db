#include "concaps/coherence.h"

#include <cstdlib>

#include "concaps/errors.h"

namespace concaps {

void CoherenceConfig::validate() const {
  if (lambda_gen < 0 || lambda_vert < 0 || lambda_hori1 < 0 || lambda_hori2 < 0)
    fail(ErrorKind::kConfig, "loss weights must be non-negative");
  if (window < 1) fail(ErrorKind::kConfig, "window W must be >= 1");
  if (scorer_hidden < 1) fail(ErrorKind::kConfig, "scorer hidden width must be positive");
}

PairScorer::PairScorer(const std::string& name, int input_width, int hidden, ParameterSet& params,
                       Rng& rng)
    : hidden_(Linear::create(params, name + ".hidden", input_width, hidden, rng)),
      output_(Linear::create(params, name + ".output", hidden, 1, rng)),
      input_width_(input_width) {}

Var PairScorer::logit(Tape& tape, Var input) const {
  if (input.cols() != input_width_) fail(ErrorKind::kContract, "scorer input width mismatch");
  return output_.apply(tape, ag::tanh(hidden_.apply(tape, input)));
}

double PairScorer::score(const RowVector& input) const {
  RowVector h = input * hidden_.weight->value + hidden_.bias->value.row(0);
  h = h.array().tanh().matrix();
  return (h * output_.weight->value)(0, 0) + output_.bias->value(0, 0);
}

PairSet enumerate_pairs(std::span<const PairMember> m, int window) {
  PairSet out;
  const int n = static_cast<int>(m.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const PairMember& a = m[static_cast<size_t>(i)];
      const PairMember& b = m[static_cast<size_t>(j)];
      if (a.doc_index != b.doc_index) {
        out.hori_neg2.emplace_back(i, j);
        continue;
      }
      if (std::abs(a.img_index - b.img_index) > window - 1) continue;
      const int first = a.img_index <= b.img_index ? i : j;
      const int second = first == i ? j : i;
      out.hori_pos.emplace_back(first, second);
      if (m[static_cast<size_t>(second)].has_fake) out.hori_neg1.emplace_back(first, second);
      if (m[static_cast<size_t>(first)].has_fake) out.hori_neg1.emplace_back(second, first);
    }
  }
  return out;
}

PairSet enumerate_pairs(const Batch& batch, int window) {
  std::vector<PairMember> members;
  members.reserve(batch.items.size());
  for (const auto& item : batch.items)
    members.push_back({item.doc_index, item.img_index, item.fake_cap.has_value()});
  return enumerate_pairs(members, window);
}

namespace {

// sum softplus(sign * logit(rows))
Var softplus_sum(Tape& tape, std::span<const Var> rows, double sign, const CoherenceScorer& scorer) {
  if (rows.empty()) return tape.scalar(0.0);
  Var logits = scorer.logit(tape, ag::concat_rows(rows));
  return ag::sum(ag::softplus(ag::scale(logits, sign)));
}

Var pair_row(const Var& a, const Var& b) {
  const Var parts[2] = {a, b};
  return ag::concat_cols(parts);
}

Var horizontal_loss(Tape& tape, std::span<const CaptionStates> states,
                    const std::vector<std::pair<int, int>>& positives,
                    const std::vector<std::pair<int, int>>& negatives, bool negatives_use_fake,
                    const CoherenceScorer& scorer) {
  std::vector<Var> pos_rows;
  for (auto [i, j] : positives)
    pos_rows.push_back(pair_row(states[static_cast<size_t>(i)].true_state,
                                states[static_cast<size_t>(j)].true_state));
  std::vector<Var> neg_rows;
  for (auto [i, j] : negatives) {
    const CaptionStates& other = states[static_cast<size_t>(j)];
    if (negatives_use_fake) {
      if (!other.fake_state) fail(ErrorKind::kContract, "negative pair needs a fake caption state");
      neg_rows.push_back(pair_row(states[static_cast<size_t>(i)].true_state, *other.fake_state));
    } else {
      neg_rows.push_back(pair_row(states[static_cast<size_t>(i)].true_state, other.true_state));
    }
  }
  return ag::add(softplus_sum(tape, pos_rows, -1.0, scorer),
                 softplus_sum(tape, neg_rows, 1.0, scorer));
}

}  // namespace

Var vertical_loss(Tape& tape, std::span<const Var> true_states,
                  std::span<const std::optional<Var>> fake_states, const CoherenceScorer& scorer) {
  if (true_states.size() != fake_states.size())
    fail(ErrorKind::kContract, "vertical_loss: true/fake state lists differ in length");
  std::vector<Var> pos;
  std::vector<Var> neg;
  for (size_t i = 0; i < true_states.size(); ++i) {
    if (!fake_states[i]) continue;
    pos.push_back(true_states[i]);
    neg.push_back(*fake_states[i]);
  }
  return ag::add(softplus_sum(tape, pos, -1.0, scorer), softplus_sum(tape, neg, 1.0, scorer));
}

Var hori1_loss(Tape& tape, std::span<const CaptionStates> states, const PairSet& pairs,
               const CoherenceScorer& scorer) {
  return horizontal_loss(tape, states, pairs.hori_pos, pairs.hori_neg1, true, scorer);
}

Var hori2_loss(Tape& tape, std::span<const CaptionStates> states, const PairSet& pairs,
               const CoherenceScorer& scorer) {
  return horizontal_loss(tape, states, pairs.hori_pos, pairs.hori_neg2, false, scorer);
}

double total_loss(double gen, double vert, double hori1, double hori2, const CoherenceConfig& cfg) {
  cfg.validate();
  return cfg.lambda_gen * gen + cfg.lambda_vert * vert + cfg.lambda_hori1 * hori1 +
         cfg.lambda_hori2 * hori2;
}

CombinedLoss combine_losses(Tape& tape, const CoherenceConfig& cfg, const LossTerms& terms) {
  cfg.validate();
  CombinedLoss out;
  out.total = tape.scalar(0.0);
  auto include = [&](double weight, const std::function<Var()>& make, double& slot) {
    if (weight == 0.0) return;
    if (!make) fail(ErrorKind::kContract, "missing producer for a weighted loss component");
    Var component = make();
    slot = component.scalar();
    out.total = ag::add(out.total, ag::scale(component, weight));
  };
  include(cfg.lambda_gen, terms.gen, out.gen);
  include(cfg.lambda_vert, terms.vert, out.vert);
  include(cfg.lambda_hori1, terms.hori1, out.hori1);
  include(cfg.lambda_hori2, terms.hori2, out.hori2);
  return out;
}

}  // namespace concaps
