#include "concaps/decoder.h"

#include "concaps/errors.h"
#include "concaps/text.h"

namespace concaps {

void ModelConfig::validate() const {
  if (layers < 1) fail(ErrorKind::kConfig, "decoder needs at least one layer");
  if (heads < 1 || d_model % heads != 0)
    fail(ErrorKind::kConfig, "d_model must be divisible by the number of heads");
  if (d_ff < 1) fail(ErrorKind::kConfig, "d_ff must be positive");
  if (vocab_size <= Vocab::kPad) fail(ErrorKind::kConfig, "vocabulary has no ordinary tokens");
  if (max_len < 2) fail(ErrorKind::kConfig, "max_len must allow <s> and </s>");
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorKind::kConfig, "dropout must be in [0, 1)");
}

CaptionDecoder::CaptionDecoder(const ModelConfig& config, const EncoderConfig& encoder,
                               ParameterSet& params, Rng& rng)
    : config_(config) {
  config_.validate();
  const int d = config.d_model;
  embedding_ = &params.add("decoder.embedding", xavier_uniform(config.vocab_size, d, rng));
  text_proj_ = Linear::create(params, "decoder.proj.text", encoder.d_text, d, rng);
  image_proj_ = Linear::create(params, "decoder.proj.image", encoder.d_image, d, rng);
  face_proj_ = Linear::create(params, "decoder.proj.faces", encoder.d_face, d, rng);
  object_proj_ = Linear::create(params, "decoder.proj.objects", encoder.d_object, d, rng);
  for (int l = 0; l < config.layers; ++l) {
    const std::string name = "decoder.layer" + std::to_string(l);
    blocks_.push_back(Block{
        LayerNorm::create(params, name + ".self_norm", d),
        MultiHeadAttention::create(params, name + ".self_attn", d, d, config.heads, rng),
        LayerNorm::create(params, name + ".cross_norm", d),
        MultiHeadAttention::create(params, name + ".cross_attn", d, d, config.heads, rng),
        LayerNorm::create(params, name + ".ff_norm", d),
        FeedForward::create(params, name + ".ff", d, config.d_ff, rng),
    });
  }
  final_norm_ = LayerNorm::create(params, "decoder.final_norm", d);
  output_ = Linear::create(params, "decoder.output", d, config.vocab_size, rng);
  positions_ = sinusoidal_positions(config.max_len, d);
}

Var CaptionDecoder::memory(Tape& tape, const EncodedStreams& s) const {
  std::vector<Var> parts;
  if (s.text.rows() > 0) parts.push_back(text_proj_.apply(tape, s.text));
  if (s.image.rows() > 0) parts.push_back(image_proj_.apply(tape, s.image));
  if (s.faces.rows() > 0) parts.push_back(face_proj_.apply(tape, s.faces));
  if (s.objects.rows() > 0) parts.push_back(object_proj_.apply(tape, s.objects));
  if (parts.empty()) fail(ErrorKind::kValidation, "all encoder streams are empty");
  return ag::concat_rows(parts);
}

DecoderOutput CaptionDecoder::forward(Tape& tape, std::span<const int> caption, Var memory,
                                      Rng* dropout_rng) const {
  if (caption.empty()) fail(ErrorKind::kLength, "empty caption");
  if (static_cast<int>(caption.size()) > config_.max_len)
    fail(ErrorKind::kLength, "caption of " + std::to_string(caption.size()) +
                                 " tokens exceeds max_len " + std::to_string(config_.max_len));
  for (int t : caption)
    if (t < 0 || t >= config_.vocab_size) fail(ErrorKind::kVocab, "caption token id out of range");

  const double rate = dropout_rng != nullptr ? config_.dropout : 0.0;
  auto drop = [&](Var v) { return rate > 0.0 ? ag::dropout(v, rate, *dropout_rng) : v; };

  Var x = ag::gather_rows(tape.parameter(*embedding_), caption);
  x = ag::add(x, tape.constant(positions_.topRows(static_cast<Eigen::Index>(caption.size()))));
  x = drop(x);
  for (const Block& b : blocks_) {
    Var h = b.self_norm.apply(tape, x);
    x = ag::add(x, drop(b.self_attention.apply(tape, h, h, /*causal=*/true)));
    x = ag::add(x, drop(b.cross_attention.apply(tape, b.cross_norm.apply(tape, x), memory, false)));
    x = ag::add(x, drop(b.feed_forward.apply(tape, b.ff_norm.apply(tape, x))));
  }
  DecoderOutput out;
  out.step_states = final_norm_.apply(tape, x);
  out.logits = output_.apply(tape, out.step_states);
  return out;
}

GenerativeLoss generative_loss(Var logits, std::span<const int> caption) {
  if (static_cast<Eigen::Index>(caption.size()) != logits.rows())
    fail(ErrorKind::kContract, "logits and caption lengths differ");
  std::vector<int> targets(caption.size(), -1);
  int count = 0;
  for (size_t t = 0; t + 1 < caption.size(); ++t) {
    const int next = caption[t + 1];
    if (next == Vocab::kPad || next == Vocab::kBos) continue;
    targets[t] = next;
    ++count;
    if (next == Vocab::kEos) break;
  }
  if (count == 0) fail(ErrorKind::kValidation, "caption has no target tokens");
  GenerativeLoss loss;
  loss.total = ag::cross_entropy(logits, targets, kNeverPredicted);
  loss.tokens = count;
  loss.per_token = loss.total.scalar() / count;
  return loss;
}

int end_position(std::span<const int> caption) {
  for (size_t i = 0; i < caption.size(); ++i)
    if (caption[i] == Vocab::kEos) return static_cast<int>(i);
  fail(ErrorKind::kContract, "caption has no </s> token");
}

Var end_state(const DecoderOutput& output, std::span<const int> caption) {
  return ag::slice_rows(output.step_states, end_position(caption), 1);
}

}  // namespace concaps
