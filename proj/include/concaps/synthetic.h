#ifndef CONCAPS_SYNTHETIC_H_
#define CONCAPS_SYNTHETIC_H_

// Synthetic news corpus with learnable cross-image coherence.
//
// Every document follows one main person and one place. Each image's text
// segment and visuals show the main person together with a per-image
// distractor, symmetrically, so a single image cannot tell them apart. The
// captions always name the main person, which only the other images of the
// document reveal.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/corpus.h"
#include "concaps/feature_store.h"

namespace concaps {

struct SyntheticOptions {
  int n_docs = 40;
  double images_per_doc = 4.45;
  int min_images = 1;
  int max_images = 10;
  double dev_fraction = 0.0;
  double test_fraction = 0.25;
  bool distractors = true;
  double no_entity_fraction = 0.1;
  int image_patches = 4;
  int raw_image = 16;
  int raw_face = 16;
  int raw_object = 16;
  double noise = 0.1;
  uint64_t seed = 7;

  void validate() const;
};

// Body tokens per image segment and the context window that covers exactly
// the part of a segment that names its entities.
inline constexpr int kSegmentTokens = 26;
inline constexpr int kSyntheticWindow = 14;

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<std::pair<std::string, std::string>> entities;  // surface, type
  std::map<std::string, FeatureBundle> features;              // by feature key
};

// Image counts summing to round(mean * n_docs), each in [min, max].
std::vector<int> images_per_document(int n_docs, double mean, int min_images, int max_images, Rng& rng);

SyntheticCorpus generate_synthetic(const SyntheticOptions& options);

// corpus.jsonl, entities.tsv and features/ under dir.
void write_synthetic(const SyntheticCorpus& data, const std::filesystem::path& dir);

}  // namespace concaps

#endif  // CONCAPS_SYNTHETIC_H_
