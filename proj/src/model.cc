#include "concaps/model.h"

#include "concaps/errors.h"

namespace concaps {

CaptionModel::CaptionModel(const ModelSpec& spec, Vocab vocab, uint64_t init_seed)
    : spec_(spec), vocab_(std::move(vocab)) {
  spec_.model.vocab_size = vocab_.size();
  spec_.model.validate();
  spec_.encoder.validate();
  spec_.coherence.validate();
  Rng rng(init_seed);
  const EncoderConfig& enc = spec_.encoder;
  if (enc.mode == EncoderMode::kToy) {
    text_encoder_ = std::make_unique<TextEncoder>(enc, vocab_.size(), params_, rng);
    image_encoder_ = std::make_unique<ToyProjectionEncoder>("encoder.image", enc.raw_image,
                                                            enc.d_image, params_, rng);
    face_encoder_ = std::make_unique<ToyProjectionEncoder>("encoder.faces", enc.raw_face,
                                                           enc.d_face, params_, rng);
    object_encoder_ = std::make_unique<ToyProjectionEncoder>("encoder.objects", enc.raw_object,
                                                             enc.d_object, params_, rng);
  }
  decoder_ = std::make_unique<CaptionDecoder>(spec_.model, enc, params_, rng);
  const int d = spec_.model.d_model;
  const int hidden = spec_.coherence.scorer_hidden;
  vert_ = std::make_unique<PairScorer>("coherence.vert", d, hidden, params_, rng);
  hori1_ = std::make_unique<PairScorer>("coherence.hori1", 2 * d, hidden, params_, rng);
  hori2_ = std::make_unique<PairScorer>("coherence.hori2", 2 * d, hidden, params_, rng);
}

EncodedStreams CaptionModel::encode(Tape& tape, const ModelInput& input) const {
  const FeatureBundle& f = input.features;
  EncodedStreams s;
  if (spec_.encoder.mode == EncoderMode::kCached) {
    s.text = tape.constant(f.text);
    s.image = tape.constant(f.image);
    s.faces = tape.constant(f.faces);
    s.objects = tape.constant(f.objects);
    return s;
  }
  s.text = text_encoder_->encode(tape, input.text_ids);
  s.image = image_encoder_->encode(tape, f.image);
  s.faces = face_encoder_->encode(tape, f.faces);
  s.objects = object_encoder_->encode(tape, f.objects);
  return s;
}

Var CaptionModel::memory(Tape& tape, const ModelInput& input) const {
  return decoder_->memory(tape, encode(tape, input));
}

DecoderOutput CaptionModel::decode(Tape& tape, std::span<const int> caption, Var memory,
                                   Rng* dropout_rng) const {
  return decoder_->forward(tape, caption, memory, dropout_rng);
}

InputSource::InputSource(const ModelSpec& spec, const Vocab& vocab, const FeatureStore& store)
    : spec_(spec), vocab_(vocab), store_(store), layout_(spec.encoder.store_layout()) {}

const FeatureBundle& InputSource::features(const std::string& feature_key) const {
  auto it = cache_.find(feature_key);
  if (it == cache_.end())
    it = cache_.emplace(feature_key, load_cached_features(feature_key, store_, layout_)).first;
  return it->second;
}

ModelInput InputSource::make(const Tokens& text, const std::string& feature_key) const {
  ModelInput in;
  in.features = features(feature_key);
  if (spec_.encoder.mode == EncoderMode::kToy) in.text_ids = vocab_.encode(text);
  return in;
}

}  // namespace concaps
