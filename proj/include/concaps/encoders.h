#ifndef CONCAPS_ENCODERS_H_
#define CONCAPS_ENCODERS_H_

// The four encoding streams the decoder attends to.
//
// Toy mode trains small encoders from scratch: a transformer over the context
// window for X^T, and per-row linear projections of raw patch/face/object
// features for X^I, X^F and X^O. Cached mode reads all four streams from a
// FeatureStore instead, so precomputed outputs of large pretrained networks
// can be plugged in without running them here.

#include <span>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/feature_store.h"
#include "concaps/layers.h"

namespace concaps {

enum class EncoderMode { kToy, kCached };

struct EncoderConfig {
  EncoderMode mode = EncoderMode::kToy;
  // Output widths d_T, d_I, d_F, d_O.
  int d_text = 64;
  int d_image = 64;
  int d_face = 32;
  int d_object = 32;
  // Toy text encoder.
  int n_text_layers = 2;
  int text_heads = 4;
  int text_ff = 128;
  int max_text_len = 512;
  // Toy visual inputs: rows x raw width.
  int image_patches = 4;
  int raw_image = 16;
  int max_faces = 4;
  int raw_face = 16;
  int raw_object = 16;

  // Cached-mode config with the pretrained widths.
  static EncoderConfig reference();
  // Shape contract of the arrays a FeatureStore must hold for this config.
  FeatureLayout store_layout() const;
  void validate() const;
};

// The encoded streams, each a [rows x width] variable; absent streams have 0 rows.
struct EncodedStreams {
  Var text;
  Var image;
  Var faces;
  Var objects;
};

class TextEncoder {
 public:
  TextEncoder(const EncoderConfig& config, int vocab_size, ParameterSet& params, Rng& rng);

  // Returns [len x d_text]; an empty input is encoded as a single <pad> row.
  Var encode(Tape& tape, std::span<const int> ids) const;
  // Per-layer outputs before mixing, for inspection and tests.
  std::vector<Var> layer_outputs(Tape& tape, std::span<const int> ids) const;

  Parameter& mix_weights() const { return *mix_; }

 private:
  struct Block {
    LayerNorm attn_norm;
    MultiHeadAttention attention;
    LayerNorm ff_norm;
    FeedForward feed_forward;
  };

  Parameter* embedding_ = nullptr;
  Parameter* mix_ = nullptr;
  std::vector<Block> blocks_;
  Matrix positions_;
  int vocab_size_;
};

// Learned per-row projection [rows x raw] -> [rows x out].
class ToyProjectionEncoder {
 public:
  ToyProjectionEncoder(const std::string& name, int raw_width, int out_width, ParameterSet& params,
                       Rng& rng);

  // Rejects non-finite inputs.
  Var encode(Tape& tape, const Matrix& raw) const;

  Parameter& weight() const { return *proj_.weight; }
  Parameter& bias() const { return *proj_.bias; }

 private:
  Linear proj_;
  int raw_width_;
  int out_width_;
};

}  // namespace concaps

#endif  // CONCAPS_ENCODERS_H_
