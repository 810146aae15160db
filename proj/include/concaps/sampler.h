#ifndef CONCAPS_SAMPLER_H_
#define CONCAPS_SAMPLER_H_

#include <optional>
#include <string>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/corpus.h"

namespace concaps {

// One training example. Captions carry <s> and </s>; fake_cap is empty when
// the true caption has no entities to replace.
struct BatchItem {
  std::string feature_key;
  Tokens txt;
  Tokens true_cap;
  std::optional<Tokens> fake_cap;
  int doc_index = 0;  // position of the document in the corpus
  int img_index = 0;  // 1-based position of the image in its document
};

struct Batch {
  std::vector<BatchItem> items;
};

struct SamplerOptions {
  int batch_size = 15;
  int window = 3;  // W
  int window_tokens = 512;
  // Documents of these splits are used; the others are skipped.
  std::vector<Split> splits = {Split::kTrain};
};

// Groups images by document so horizontal pairs exist inside each batch.
// Every (document, image) pair is emitted at most once per epoch.
std::vector<Batch> build_epoch_batches(const Corpus& corpus, const EntityPool& pool,
                                       const SamplerOptions& options, Rng& rng);

// The special tokens wrapped around caption text inside BatchItem.
Tokens wrap_caption(const Tokens& caption);

}  // namespace concaps

#endif  // CONCAPS_SAMPLER_H_
