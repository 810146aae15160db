#ifndef CONCAPS_COHERENCE_H_
#define CONCAPS_COHERENCE_H_

// Contrastive coherence objectives over caption end states.
//
// vertical: true caption vs. its entity-replaced fake, same image and text.
// hori1:    adjacent true/true pairs vs. true/fake pairs from one document.
// hori2:    adjacent true/true pairs vs. true/true pairs across documents.
// All three are binary cross-entropy on a scalar logit, written with softplus:
//   -log sigmoid(x) = softplus(-x),  -log(1 - sigmoid(x)) = softplus(x).

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/layers.h"
#include "concaps/sampler.h"

namespace concaps {

struct CoherenceConfig {
  double lambda_gen = 1.0;
  double lambda_vert = 0.01;
  double lambda_hori1 = 0.01;
  double lambda_hori2 = 0.1;
  int window = 3;  // W
  int scorer_hidden = 1024;

  // Throws kConfig for negative weights or a window below 1.
  void validate() const;
};

// Maps each row of its input to one logit.
class CoherenceScorer {
 public:
  virtual ~CoherenceScorer() = default;
  // [N x width] -> [N x 1]
  virtual Var logit(Tape& tape, Var input) const = 0;
};

// Two-layer perceptron: width -> hidden (tanh) -> 1.
class PairScorer final : public CoherenceScorer {
 public:
  PairScorer(const std::string& name, int input_width, int hidden, ParameterSet& params, Rng& rng);

  Var logit(Tape& tape, Var input) const override;
  // Plain evaluation of one row.
  double score(const RowVector& input) const;
  int input_width() const { return input_width_; }

  const Linear& hidden_layer() const { return hidden_; }
  const Linear& output_layer() const { return output_; }

 private:
  Linear hidden_;
  Linear output_;
  int input_width_;
};

// Item-index pairs within one batch.
struct PairSet {
  // (i, j): same document, image gap <= W - 1, i the earlier image.
  std::vector<std::pair<int, int>> hori_pos;
  // (i, j): true caption of i against the fake caption of j.
  std::vector<std::pair<int, int>> hori_neg1;
  // (i, j), i < j: items from different documents.
  std::vector<std::pair<int, int>> hori_neg2;

  bool operator==(const PairSet&) const = default;
};

struct PairMember {
  int doc_index = 0;
  int img_index = 0;
  bool has_fake = false;
};

PairSet enumerate_pairs(std::span<const PairMember> members, int window);
PairSet enumerate_pairs(const Batch& batch, int window);

struct CaptionStates {
  Var true_state;                 // 1 x d_model
  std::optional<Var> fake_state;  // absent when the item has no fake caption
};

// Sum over items that have a fake caption.
Var vertical_loss(Tape& tape, std::span<const Var> true_states,
                  std::span<const std::optional<Var>> fake_states, const CoherenceScorer& scorer);

Var hori1_loss(Tape& tape, std::span<const CaptionStates> states, const PairSet& pairs,
               const CoherenceScorer& scorer);
Var hori2_loss(Tape& tape, std::span<const CaptionStates> states, const PairSet& pairs,
               const CoherenceScorer& scorer);

// Weighted sum of already-computed components.
double total_loss(double gen, double vert, double hori1, double hori2, const CoherenceConfig& cfg);

// Component producers; a component whose weight is zero is never called.
struct LossTerms {
  std::function<Var()> gen;
  std::function<Var()> vert;
  std::function<Var()> hori1;
  std::function<Var()> hori2;
};

struct CombinedLoss {
  Var total;
  double gen = 0.0;
  double vert = 0.0;
  double hori1 = 0.0;
  double hori2 = 0.0;
};

CombinedLoss combine_losses(Tape& tape, const CoherenceConfig& cfg, const LossTerms& terms);

}  // namespace concaps

#endif  // CONCAPS_COHERENCE_H_
