#ifndef CONCAPS_METRICS_H_
#define CONCAPS_METRICS_H_

// Caption-quality metrics. Candidates and references are aligned lists, one
// reference per candidate. Tokens are compared lowercased.

#include <vector>

#include "concaps/corpus.h"
#include "concaps/text.h"

namespace concaps {

inline constexpr double kBleuSmoothing = 0.1;
inline constexpr double kRougeBeta = 1.2;

// Corpus-level BLEU-4: clipped n-gram precision summed over the corpus,
// geometric mean over n = 1..4, brevity penalty. Zero-match orders get
// (kBleuSmoothing / count). No unigram match at all scores 0.
double bleu4(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

size_t lcs_length(const Tokens& a, const Tokens& b);

// Mean per-pair ROUGE-L F-measure.
double rouge_l(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

// Base CIDEr: per n, tf-idf vectors with idf = log(N) - log(max(1, df)) where
// df counts references containing the n-gram; cosine similarity averaged over
// n = 1..4 and over pairs. No length penalty, no scaling.
double cider(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

struct EntityScores {
  double precision = 0.0;
  double recall = 0.0;
};

// Entity surfaces per caption, lowercased and joined by single spaces.
using EntityBag = std::vector<std::string>;

// Micro-averaged multiset overlap. Pairs without candidate entities are left
// out of the precision denominator, pairs without reference entities out of
// the recall denominator.
EntityScores ne_precision_recall(const std::vector<EntityBag>& candidates,
                                 const std::vector<EntityBag>& references);

EntityBag entity_bag(const Tokens& caption, const EntityTagger& tagger);

EntityScores ne_precision_recall(const std::vector<Tokens>& candidates,
                                 const std::vector<Tokens>& references, const EntityTagger& tagger);

}  // namespace concaps

#endif  // CONCAPS_METRICS_H_
