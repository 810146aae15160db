#ifndef CONCAPS_TESTS_METRIC_ORACLE_H_
#define CONCAPS_TESTS_METRIC_ORACLE_H_

// Slow, direct reimplementations of the caption metrics used as test oracles.
// N-grams are keyed by their space-joined string.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "concaps/text.h"

namespace concaps::testing::oracle {

// Five caption pairs with partial, exact and empty overlaps.
inline const std::vector<std::string> kFixtureCandidates = {
    "Anna Lee speaks at a rally in Paris",
    "the mayor arrives for a meeting with Red Cross officials",
    "a crowd gathers outside the hall",
    "Boris poses for a photo with Anna",
    "reporters talk",
};
inline const std::vector<std::string> kFixtureReferences = {
    "Anna Lee speaks at a rally in Oslo",
    "Carla Diaz arrives for a meeting with World Bank officials",
    "a crowd gathers outside the hall",
    "Anna poses for a photo",
    "Boris Ivanov talks to reporters in Hong Kong",
};

inline std::vector<std::string> lower_all(const Tokens& t) {
  std::vector<std::string> out;
  for (const auto& s : t) out.push_back(lowercase(s));
  return out;
}

inline std::map<std::string, int> grams(const Tokens& raw, int n) {
  const auto t = lower_all(raw);
  std::map<std::string, int> out;
  for (int i = 0; i + n <= static_cast<int>(t.size()); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) key += (k ? " " : "") + t[static_cast<size_t>(i + k)];
    out[key] += 1;
  }
  return out;
}

inline double bleu4(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs) {
  double log_p = 0.0;
  double c_len = 0, r_len = 0;
  for (size_t i = 0; i < cands.size(); ++i) {
    c_len += cands[i].size();
    r_len += refs[i].size();
  }
  for (int n = 1; n <= 4; ++n) {
    double hit = 0, all = 0;
    for (size_t i = 0; i < cands.size(); ++i) {
      auto r = grams(refs[i], n);
      for (auto& [g, c] : grams(cands[i], n)) {
        all += c;
        hit += std::min(c, r[g]);
      }
    }
    if (n == 1 && hit == 0) return 0.0;
    log_p += std::log(hit > 0 ? hit / std::max(1.0, all) : 0.1 / std::max(1.0, all));
  }
  if (c_len == 0) return 0.0;
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  return bp * std::exp(log_p / 4);
}

inline size_t lcs(const Tokens& a, const Tokens& b) {
  std::map<std::pair<size_t, size_t>, size_t> memo;
  std::function<size_t(size_t, size_t)> go = [&](size_t i, size_t j) -> size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    size_t best = std::max(go(i + 1, j), go(i, j + 1));
    if (a[i] == b[j]) best = std::max(best, 1 + go(i + 1, j + 1));
    return memo[key] = best;
  };
  return go(0, 0);
}

inline double rouge_l(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs) {
  double sum = 0;
  for (size_t i = 0; i < cands.size(); ++i) {
    const double l = static_cast<double>(lcs(lower_all(cands[i]), lower_all(refs[i])));
    if (l == 0) continue;
    const double p = l / cands[i].size(), r = l / refs[i].size();
    sum += (1 + 1.44) * p * r / (r + 1.44 * p);
  }
  return cands.empty() ? 0.0 : sum / cands.size();
}

inline double cider(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs) {
  const double n_docs = static_cast<double>(refs.size());
  double sum = 0;
  for (int n = 1; n <= 4; ++n) {
    std::map<std::string, double> df;
    for (const auto& r : refs)
      for (auto& [g, c] : grams(r, n)) df[g] += 1;
    auto idf = [&](const std::string& g) { return std::log(n_docs) - std::log(std::max(1.0, df[g])); };
    for (size_t i = 0; i < cands.size(); ++i) {
      std::map<std::string, double> vc, vr;
      for (auto& [g, c] : grams(cands[i], n)) vc[g] = c * idf(g);
      for (auto& [g, c] : grams(refs[i], n)) vr[g] = c * idf(g);
      double dot = 0, a = 0, b = 0;
      for (auto& [g, x] : vc) {
        a += x * x;
        if (vr.count(g)) dot += x * vr[g];
      }
      for (auto& [g, y] : vr) b += y * y;
      if (a > 0 && b > 0) sum += dot / std::sqrt(a * b);
    }
  }
  return cands.empty() ? 0.0 : sum / (4.0 * cands.size());
}

// Micro-averaged entity precision and recall over multisets.
inline std::pair<double, double> ne(const std::vector<std::vector<std::string>>& cands,
                                    const std::vector<std::vector<std::string>>& refs) {
  double cp = 0, cr = 0, np = 0, nr = 0;
  for (size_t i = 0; i < cands.size(); ++i) {
    std::vector<std::string> pool;
    for (const auto& s : refs[i]) pool.push_back(lowercase(s));
    double hits = 0;
    for (const auto& s : cands[i]) {
      auto it = std::find(pool.begin(), pool.end(), lowercase(s));
      if (it != pool.end()) {
        pool.erase(it);
        hits += 1;
      }
    }
    if (!cands[i].empty()) {
      cp += hits;
      np += cands[i].size();
    }
    if (!refs[i].empty()) {
      cr += hits;
      nr += refs[i].size();
    }
  }
  return {np > 0 ? cp / np : 0.0, nr > 0 ? cr / nr : 0.0};
}

}  // namespace concaps::testing::oracle

#endif  // CONCAPS_TESTS_METRIC_ORACLE_H_
