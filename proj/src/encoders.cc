#include "concaps/encoders.h"

#include "concaps/errors.h"
#include "concaps/text.h"

namespace concaps {

EncoderConfig EncoderConfig::reference() {
  EncoderConfig c;
  c.mode = EncoderMode::kCached;
  c.d_text = 2048;
  c.d_image = 2048;
  c.d_face = 512;
  c.d_object = 2048;
  c.image_patches = 49;
  c.max_faces = 4;
  return c;
}

FeatureLayout EncoderConfig::store_layout() const {
  FeatureLayout l;
  l.image_rows = image_patches;
  l.max_faces = max_faces;
  if (mode == EncoderMode::kCached) {
    l.text_width = d_text;
    l.image_width = d_image;
    l.face_width = d_face;
    l.object_width = d_object;
  } else {
    // Toy stores hold raw visual inputs only; text comes from the corpus.
    l.text_rows = 0;
    l.image_width = raw_image;
    l.face_width = raw_face;
    l.object_width = raw_object;
  }
  return l;
}

void EncoderConfig::validate() const {
  if (d_text < 1 || d_image < 1 || d_face < 1 || d_object < 1)
    fail(ErrorKind::kConfig, "encoder widths must be positive");
  if (image_patches < 1) fail(ErrorKind::kConfig, "image needs at least one patch");
  if (mode == EncoderMode::kToy) {
    if (n_text_layers < 1) fail(ErrorKind::kConfig, "text encoder needs at least one layer");
    if (text_heads < 1 || d_text % text_heads != 0)
      fail(ErrorKind::kConfig, "d_text must be divisible by text_heads");
    if (raw_image < 1 || raw_face < 1 || raw_object < 1)
      fail(ErrorKind::kConfig, "raw feature widths must be positive");
  }
}

TextEncoder::TextEncoder(const EncoderConfig& config, int vocab_size, ParameterSet& params, Rng& rng)
    : vocab_size_(vocab_size) {
  embedding_ = &params.add("encoder.text.embedding", xavier_uniform(vocab_size, config.d_text, rng));
  for (int l = 0; l < config.n_text_layers; ++l) {
    const std::string name = "encoder.text.layer" + std::to_string(l);
    blocks_.push_back(Block{
        LayerNorm::create(params, name + ".attn_norm", config.d_text),
        MultiHeadAttention::create(params, name + ".attn", config.d_text, config.d_text,
                                   config.text_heads, rng),
        LayerNorm::create(params, name + ".ff_norm", config.d_text),
        FeedForward::create(params, name + ".ff", config.d_text, config.text_ff, rng),
    });
  }
  mix_ = &params.add("encoder.text.mix", Matrix::Zero(1, config.n_text_layers));
  positions_ = sinusoidal_positions(config.max_text_len, config.d_text);
}

std::vector<Var> TextEncoder::layer_outputs(Tape& tape, std::span<const int> ids) const {
  std::vector<int> tokens(ids.begin(), ids.end());
  if (tokens.empty()) tokens.push_back(Vocab::kPad);
  if (static_cast<Eigen::Index>(tokens.size()) > positions_.rows())
    fail(ErrorKind::kLength, "text longer than the encoder's position table");
  for (int t : tokens)
    if (t < 0 || t >= vocab_size_) fail(ErrorKind::kVocab, "text token id out of range");

  Var x = ag::gather_rows(tape.parameter(*embedding_), tokens);
  x = ag::add(x, tape.constant(positions_.topRows(static_cast<Eigen::Index>(tokens.size()))));
  std::vector<Var> outputs;
  for (const Block& b : blocks_) {
    Var h = b.attn_norm.apply(tape, x);
    x = ag::add(x, b.attention.apply(tape, h, h, /*causal=*/false));
    x = ag::add(x, b.feed_forward.apply(tape, b.ff_norm.apply(tape, x)));
    outputs.push_back(x);
  }
  return outputs;
}

Var TextEncoder::encode(Tape& tape, std::span<const int> ids) const {
  std::vector<Var> outputs = layer_outputs(tape, ids);
  return ag::mix_layers(outputs, tape.parameter(*mix_));
}

ToyProjectionEncoder::ToyProjectionEncoder(const std::string& name, int raw_width, int out_width,
                                           ParameterSet& params, Rng& rng)
    : proj_(Linear::create(params, name, raw_width, out_width, rng)),
      raw_width_(raw_width),
      out_width_(out_width) {}

Var ToyProjectionEncoder::encode(Tape& tape, const Matrix& raw) const {
  if (!raw.allFinite()) fail(ErrorKind::kValidation, "non-finite visual features");
  if (raw.rows() == 0) return tape.constant(Matrix(0, out_width_));
  if (raw.cols() != raw_width_)
    fail(ErrorKind::kFormat, "visual features have width " + std::to_string(raw.cols()) +
                                 ", expected " + std::to_string(raw_width_));
  return proj_.apply(tape, tape.constant(raw));
}

}  // namespace concaps
