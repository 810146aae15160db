#ifndef CONCAPS_DECODER_H_
#define CONCAPS_DECODER_H_

// Transformer caption decoder: causal self-attention over the caption prefix,
// cross-attention over the concatenated encoder streams, token logits.

#include <array>
#include <span>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/encoders.h"
#include "concaps/layers.h"

namespace concaps {

struct ModelConfig {
  int layers = 2;  // L
  int heads = 4;
  int d_model = 64;
  int d_ff = 128;
  int vocab_size = 0;
  int max_len = 40;  // caption positions, <s> and </s> included
  double dropout = 0.0;

  void validate() const;
};

struct DecoderOutput {
  Var step_states;  // [T x d_model], the last layer's state at every position
  Var logits;       // [T x vocab]; row t predicts caption token t + 1
};

// <s> and <pad> can never be predicted.
inline constexpr std::array<int, 2> kNeverPredicted = {0, 3};

class CaptionDecoder {
 public:
  CaptionDecoder(const ModelConfig& config, const EncoderConfig& encoder, ParameterSet& params,
                 Rng& rng);

  // Projects each non-empty stream to d_model and stacks them row-wise (X_0).
  Var memory(Tape& tape, const EncodedStreams& streams) const;

  // Teacher-forced pass over a full caption (ids include <s>, </s>, and any
  // trailing <pad>). dropout_rng enables dropout when the config asks for it.
  DecoderOutput forward(Tape& tape, std::span<const int> caption, Var memory,
                        Rng* dropout_rng = nullptr) const;

  const ModelConfig& config() const { return config_; }

 private:
  struct Block {
    LayerNorm self_norm;
    MultiHeadAttention self_attention;
    LayerNorm cross_norm;
    MultiHeadAttention cross_attention;
    LayerNorm ff_norm;
    FeedForward feed_forward;
  };

  ModelConfig config_;
  Parameter* embedding_ = nullptr;
  Linear text_proj_;
  Linear image_proj_;
  Linear face_proj_;
  Linear object_proj_;
  std::vector<Block> blocks_;
  LayerNorm final_norm_;
  Linear output_;
  Matrix positions_;
};

struct GenerativeLoss {
  Var total;  // summed negative log-likelihood
  double per_token = 0.0;
  int tokens = 0;
};

// Targets are caption[1..] up to and including the first </s>; <pad> targets
// are ignored and <s> is never scored.
GenerativeLoss generative_loss(Var logits, std::span<const int> caption);

// Index of the first </s>.
int end_position(std::span<const int> caption);

// The last layer's state at the </s> position, as a 1 x d_model row.
Var end_state(const DecoderOutput& output, std::span<const int> caption);

}  // namespace concaps

#endif  // CONCAPS_DECODER_H_
