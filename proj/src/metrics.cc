#include "concaps/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "concaps/errors.h"

namespace concaps {

namespace {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, int>;

void check_aligned(size_t a, size_t b) {
  if (a != b) fail(ErrorKind::kValidation, "candidate and reference lists differ in length");
}

Tokens lowered(const Tokens& tokens) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lowercase(t));
  return out;
}

NgramCounts ngrams(const Tokens& tokens, size_t n) {
  NgramCounts out;
  for (size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[Ngram(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
  return out;
}

}  // namespace

double bleu4(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  check_aligned(candidates.size(), references.size());
  double matches[4] = {0, 0, 0, 0};
  double totals[4] = {0, 0, 0, 0};
  double cand_len = 0, ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Tokens cand = lowered(candidates[i]);
    const Tokens ref = lowered(references[i]);
    cand_len += static_cast<double>(cand.size());
    ref_len += static_cast<double>(ref.size());
    for (size_t n = 1; n <= 4; ++n) {
      const NgramCounts c = ngrams(cand, n);
      const NgramCounts r = ngrams(ref, n);
      for (const auto& [g, count] : c) {
        auto it = r.find(g);
        if (it != r.end()) matches[n - 1] += std::min(count, it->second);
        totals[n - 1] += count;
      }
    }
  }
  if (matches[0] == 0.0 || cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    const double denom = std::max(1.0, totals[n]);
    const double p = matches[n] > 0.0 ? matches[n] / denom : kBleuSmoothing / denom;
    log_sum += std::log(p);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / 4.0);
}

size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  check_aligned(candidates.size(), references.size());
  if (candidates.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Tokens cand = lowered(candidates[i]);
    const Tokens ref = lowered(references[i]);
    const double lcs = static_cast<double>(lcs_length(cand, ref));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(cand.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double b2 = kRougeBeta * kRougeBeta;
    total += (1.0 + b2) * p * r / (r + b2 * p);
  }
  return total / static_cast<double>(candidates.size());
}

double cider(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  check_aligned(candidates.size(), references.size());
  if (candidates.empty()) return 0.0;
  const double log_n = std::log(static_cast<double>(references.size()));
  std::vector<Tokens> cands, refs;
  for (size_t i = 0; i < candidates.size(); ++i) {
    cands.push_back(lowered(candidates[i]));
    refs.push_back(lowered(references[i]));
  }
  double total = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    std::map<Ngram, int> df;
    std::vector<NgramCounts> ref_counts;
    for (const Tokens& r : refs) {
      ref_counts.push_back(ngrams(r, n));
      for (const auto& entry : ref_counts.back()) ++df[entry.first];
    }
    auto weight = [&](const Ngram& g) {
      auto it = df.find(g);
      const double d = it == df.end() ? 1.0 : std::max(1.0, static_cast<double>(it->second));
      return log_n - std::log(d);
    };
    for (size_t i = 0; i < cands.size(); ++i) {
      const NgramCounts c = ngrams(cands[i], n);
      const NgramCounts& r = ref_counts[i];
      double dot = 0.0, nc = 0.0, nr = 0.0;
      for (const auto& [g, count] : c) {
        const double v = count * weight(g);
        nc += v * v;
        auto it = r.find(g);
        if (it != r.end()) dot += v * it->second * weight(g);
      }
      for (const auto& [g, count] : r) {
        const double v = count * weight(g);
        nr += v * v;
      }
      if (nc > 0.0 && nr > 0.0) total += dot / (std::sqrt(nc) * std::sqrt(nr));
    }
  }
  return total / (4.0 * static_cast<double>(cands.size()));
}

EntityScores ne_precision_recall(const std::vector<EntityBag>& candidates,
                                 const std::vector<EntityBag>& references) {
  check_aligned(candidates.size(), references.size());
  double hit_p = 0, denom_p = 0, hit_r = 0, denom_r = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    std::map<std::string, int> c, r;
    for (const auto& s : candidates[i]) ++c[lowercase(s)];
    for (const auto& s : references[i]) ++r[lowercase(s)];
    double common = 0;
    for (const auto& [s, count] : c) {
      auto it = r.find(s);
      if (it != r.end()) common += std::min(count, it->second);
    }
    if (!candidates[i].empty()) {
      hit_p += common;
      denom_p += static_cast<double>(candidates[i].size());
    }
    if (!references[i].empty()) {
      hit_r += common;
      denom_r += static_cast<double>(references[i].size());
    }
  }
  EntityScores out;
  out.precision = denom_p > 0 ? hit_p / denom_p : 0.0;
  out.recall = denom_r > 0 ? hit_r / denom_r : 0.0;
  return out;
}

EntityBag entity_bag(const Tokens& caption, const EntityTagger& tagger) {
  EntityBag bag;
  for (const EntitySpan& span : tagger.tag(caption)) bag.push_back(lowercase(join_tokens(span.surface)));
  return bag;
}

EntityScores ne_precision_recall(const std::vector<Tokens>& candidates,
                                 const std::vector<Tokens>& references, const EntityTagger& tagger) {
  check_aligned(candidates.size(), references.size());
  std::vector<EntityBag> c, r;
  for (size_t i = 0; i < candidates.size(); ++i) {
    c.push_back(entity_bag(candidates[i], tagger));
    r.push_back(entity_bag(references[i], tagger));
  }
  return ne_precision_recall(c, r);
}

}  // namespace concaps
