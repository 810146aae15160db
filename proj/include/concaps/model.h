#ifndef CONCAPS_MODEL_H_
#define CONCAPS_MODEL_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/coherence.h"
#include "concaps/decoder.h"
#include "concaps/encoders.h"
#include "concaps/feature_store.h"
#include "concaps/text.h"

namespace concaps {

struct ModelSpec {
  ModelConfig model;
  EncoderConfig encoder;
  CoherenceConfig coherence;
};

// What the model needs for one image: the context window (toy mode) and the
// stored feature arrays (raw visuals in toy mode, all four streams in cached
// mode).
struct ModelInput {
  std::vector<int> text_ids;
  FeatureBundle features;
};

// Encoders, decoder and the three coherence heads, sharing one ParameterSet.
class CaptionModel {
 public:
  CaptionModel(const ModelSpec& spec, Vocab vocab, uint64_t init_seed);
  CaptionModel(const CaptionModel&) = delete;
  CaptionModel& operator=(const CaptionModel&) = delete;

  const ModelSpec& spec() const { return spec_; }
  const Vocab& vocab() const { return vocab_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  EncodedStreams encode(Tape& tape, const ModelInput& input) const;
  // Encoded and projected X_0.
  Var memory(Tape& tape, const ModelInput& input) const;
  DecoderOutput decode(Tape& tape, std::span<const int> caption, Var memory,
                       Rng* dropout_rng = nullptr) const;

  const TextEncoder* text_encoder() const { return text_encoder_.get(); }
  const ToyProjectionEncoder* image_encoder() const { return image_encoder_.get(); }
  const CaptionDecoder& decoder() const { return *decoder_; }
  const PairScorer& vert_scorer() const { return *vert_; }
  const PairScorer& hori1_scorer() const { return *hori1_; }
  const PairScorer& hori2_scorer() const { return *hori2_; }

 private:
  ModelSpec spec_;
  Vocab vocab_;
  ParameterSet params_;
  std::unique_ptr<TextEncoder> text_encoder_;
  std::unique_ptr<ToyProjectionEncoder> image_encoder_;
  std::unique_ptr<ToyProjectionEncoder> face_encoder_;
  std::unique_ptr<ToyProjectionEncoder> object_encoder_;
  std::unique_ptr<CaptionDecoder> decoder_;
  std::unique_ptr<PairScorer> vert_;
  std::unique_ptr<PairScorer> hori1_;
  std::unique_ptr<PairScorer> hori2_;
};

// Builds ModelInputs for corpus images and memoizes the feature reads.
class InputSource {
 public:
  InputSource(const ModelSpec& spec, const Vocab& vocab, const FeatureStore& store);

  ModelInput make(const Tokens& text, const std::string& feature_key) const;
  const FeatureBundle& features(const std::string& feature_key) const;

 private:
  const ModelSpec& spec_;
  const Vocab& vocab_;
  const FeatureStore& store_;
  FeatureLayout layout_;
  mutable std::map<std::string, FeatureBundle> cache_;
};

}  // namespace concaps

#endif  // CONCAPS_MODEL_H_
