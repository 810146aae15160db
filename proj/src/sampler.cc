#include "concaps/sampler.h"

#include <algorithm>

#include "concaps/errors.h"

namespace concaps {

Tokens wrap_caption(const Tokens& caption) {
  Tokens out;
  out.reserve(caption.size() + 2);
  out.emplace_back(Vocab::kBosToken);
  out.insert(out.end(), caption.begin(), caption.end());
  out.emplace_back(Vocab::kEosToken);
  return out;
}

namespace {

BatchItem make_item(const Corpus& corpus, int doc_index, int img_index, const EntityPool& pool,
                    int window_tokens, Rng& rng) {
  const Document& doc = corpus[static_cast<size_t>(doc_index)];
  const ImageRecord& im = doc.images[static_cast<size_t>(img_index - 1)];
  BatchItem item;
  item.feature_key = im.feature_key;
  item.txt = extract_context_window(doc, img_index, window_tokens);
  item.true_cap = wrap_caption(im.caption);
  if (auto fake = make_fake_caption(im.caption, im.entities, pool, rng))
    item.fake_cap = wrap_caption(fake->caption);
  item.doc_index = doc_index;
  item.img_index = img_index;
  return item;
}

}  // namespace

std::vector<Batch> build_epoch_batches(const Corpus& corpus, const EntityPool& pool,
                                       const SamplerOptions& options, Rng& rng) {
  if (options.batch_size < 1) fail(ErrorKind::kConfig, "batch_size must be >= 1");
  if (options.window < 1) fail(ErrorKind::kConfig, "window W must be >= 1");

  // next_image[d] is the 1-based index of document d's next unconsumed image.
  std::vector<int> next_image(corpus.size(), 1);
  std::vector<int> open_docs;
  for (size_t d = 0; d < corpus.size(); ++d) {
    const bool wanted = std::find(options.splits.begin(), options.splits.end(),
                                  corpus[d].split) != options.splits.end();
    if (wanted && !corpus[d].images.empty()) open_docs.push_back(static_cast<int>(d));
  }
  if (open_docs.empty()) fail(ErrorKind::kValidation, "corpus has no images to sample");

  std::vector<Batch> batches;
  Batch current;
  std::vector<int> docs_in_current;
  auto emit = [&](bool full) {
    if (full || current.items.size() >= 2) batches.push_back(std::move(current));
    current = Batch{};
    docs_in_current.clear();
  };

  while (!open_docs.empty()) {
    // A document contributes at most one group per batch.
    std::vector<int> eligible;
    for (int d : open_docs)
      if (std::find(docs_in_current.begin(), docs_in_current.end(), d) == docs_in_current.end())
        eligible.push_back(d);
    if (eligible.empty()) {
      emit(false);
      continue;
    }
    std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
    const int d = eligible[pick(rng)];
    const int n_images = static_cast<int>(corpus[static_cast<size_t>(d)].images.size());
    const int remaining = n_images - next_image[static_cast<size_t>(d)] + 1;
    const int room = options.batch_size - static_cast<int>(current.items.size());
    const int take = std::min({options.window, remaining, room});
    for (int k = 0; k < take; ++k) {
      const int img = next_image[static_cast<size_t>(d)] + k;
      current.items.push_back(make_item(corpus, d, img, pool, options.window_tokens, rng));
    }
    next_image[static_cast<size_t>(d)] += take;
    docs_in_current.push_back(d);
    if (next_image[static_cast<size_t>(d)] > n_images)
      open_docs.erase(std::find(open_docs.begin(), open_docs.end(), d));
    if (static_cast<int>(current.items.size()) == options.batch_size) emit(true);
  }
  if (!current.items.empty()) emit(false);
  return batches;
}

}  // namespace concaps
