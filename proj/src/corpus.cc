#include "concaps/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "concaps/errors.h"

namespace concaps {

using json = nlohmann::ordered_json;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  fail(ErrorKind::kValidation, "unknown split '" + std::string(name) + "'");
}

namespace {

std::string require_string(const json& obj, const char* key, size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": missing string field '" + key + "'");
  return it->get<std::string>();
}

Document parse_document(const std::string& text, size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kParse, "line " + std::to_string(line) + ": not an object");

  Document doc;
  doc.doc_id = require_string(j, "doc_id", line);
  try {
    doc.split = parse_split(require_string(j, "split", line));
  } catch (const Error& e) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": " + e.what());
  }
  doc.title = tokenize(require_string(j, "title", line));
  doc.body = tokenize(require_string(j, "body", line));

  auto images = j.find("images");
  if (images == j.end() || !images->is_array())
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": missing array field 'images'");
  for (const auto& im : *images) {
    if (!im.is_object()) fail(ErrorKind::kParse, "line " + std::to_string(line) + ": bad image");
    ImageRecord rec;
    rec.image_id = require_string(im, "image_id", line);
    auto pos = im.find("position");
    if (pos == im.end() || !pos->is_number_integer())
      fail(ErrorKind::kParse, "line " + std::to_string(line) + ": image position must be an integer");
    const long long p = pos->get<long long>();
    if (p < 0 || p > static_cast<long long>(doc.body.size()))
      fail(ErrorKind::kValidation, "line " + std::to_string(line) + ": image " + rec.image_id +
                                       " position " + std::to_string(p) +
                                       " out of range for body of " +
                                       std::to_string(doc.body.size()) + " tokens");
    rec.position = static_cast<int>(p);
    rec.caption = tokenize(require_string(im, "caption", line));
    rec.feature_key = require_string(im, "feature_key", line);
    doc.images.push_back(std::move(rec));
  }
  std::stable_sort(doc.images.begin(), doc.images.end(),
                   [](const ImageRecord& a, const ImageRecord& b) { return a.position < b.position; });
  return doc;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::set<std::string> seen;
  std::string text;
  size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc = parse_document(text, line);
    if (!seen.insert(doc.doc_id).second)
      fail(ErrorKind::kValidation, "line " + std::to_string(line) + ": duplicate doc_id " + doc.doc_id);
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kNotFound, "cannot open corpus " + path.string());
  return parse_corpus(in);
}

std::string document_to_json_line(const Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["split"] = std::string(split_name(doc.split));
  j["title"] = join_tokens(doc.title);
  j["body"] = join_tokens(doc.body);
  j["images"] = json::array();
  for (const auto& im : doc.images) {
    json r;
    r["image_id"] = im.image_id;
    r["position"] = im.position;
    r["caption"] = join_tokens(im.caption);
    r["feature_key"] = im.feature_key;
    j["images"].push_back(std::move(r));
  }
  return j.dump();
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus) out << document_to_json_line(doc) << '\n';
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write corpus " + path.string());
  write_corpus(corpus, out);
}

TokenRange context_window_range(size_t body_len, size_t position, int window_tokens) {
  if (window_tokens < 2) fail(ErrorKind::kValidation, "window must hold at least 2 tokens");
  const size_t w = static_cast<size_t>(window_tokens);
  if (body_len <= w) return {0, body_len};
  const size_t before = w / 2;
  size_t begin = position > before ? position - before : 0;
  if (begin + w > body_len) begin = body_len - w;
  return {begin, begin + w};
}

Tokens extract_context_window(const Document& doc, int img_index, int window_tokens) {
  if (img_index < 1 || img_index > static_cast<int>(doc.images.size()))
    fail(ErrorKind::kIndex, "image index " + std::to_string(img_index) + " out of range for " +
                                doc.doc_id);
  const auto& im = doc.images[static_cast<size_t>(img_index - 1)];
  TokenRange r = context_window_range(doc.body.size(), static_cast<size_t>(im.position), window_tokens);
  return Tokens(doc.body.begin() + static_cast<long>(r.begin), doc.body.begin() + static_cast<long>(r.end));
}

DictionaryTagger DictionaryTagger::parse(std::istream& in) {
  DictionaryTagger tagger;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      fail(ErrorKind::kParse, "entity dictionary line " + std::to_string(n) +
                                  ": expected surface<TAB>etype");
    tagger.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return tagger;
}

DictionaryTagger DictionaryTagger::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kNotFound, "cannot open entity dictionary " + path.string());
  return parse(in);
}

void DictionaryTagger::add(std::string_view surface, std::string_view etype) {
  std::vector<std::string> key;
  for (const auto& t : tokenize(surface)) key.push_back(lowercase(t));
  if (key.empty()) fail(ErrorKind::kParse, "empty entity surface");
  longest_ = std::max(longest_, key.size());
  entries_[std::move(key)] = std::string(etype);
}

std::vector<EntitySpan> DictionaryTagger::tag(std::span<const std::string> tokens) const {
  std::vector<EntitySpan> spans;
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(lowercase(t));
  size_t i = 0;
  while (i < lower.size()) {
    size_t matched = 0;
    const std::string* etype = nullptr;
    for (size_t len = std::min(longest_, lower.size() - i); len >= 1; --len) {
      std::vector<std::string> key(lower.begin() + static_cast<long>(i),
                                   lower.begin() + static_cast<long>(i + len));
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        matched = len;
        etype = &it->second;
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    EntitySpan span;
    span.start = static_cast<int>(i);
    span.end = static_cast<int>(i + matched);
    span.etype = *etype;
    span.surface.assign(tokens.begin() + static_cast<long>(i),
                        tokens.begin() + static_cast<long>(i + matched));
    spans.push_back(std::move(span));
    i += matched;
  }
  return spans;
}

void tag_corpus(Corpus& corpus, const EntityTagger& tagger) {
  for (auto& doc : corpus)
    for (auto& im : doc.images) im.entities = tagger.tag(im.caption);
}

EntityPool EntityPool::build(const Corpus& corpus) {
  EntityPool pool;
  std::map<std::string, std::set<Tokens>> seen;
  for (const auto& doc : corpus) {
    if (doc.split != Split::kTrain) continue;
    for (const auto& im : doc.images)
      for (const auto& span : im.entities)
        if (seen[span.etype].insert(span.surface).second)
          pool.surfaces[span.etype].push_back(span.surface);
  }
  return pool;
}

namespace {

bool same_surface(const Tokens& a, const Tokens& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (lowercase(a[i]) != lowercase(b[i])) return false;
  return true;
}

}  // namespace

std::optional<FakeCaption> make_fake_caption(std::span<const std::string> caption,
                                             std::span<const EntitySpan> entities,
                                             const EntityPool& pool, Rng& rng) {
  constexpr int kMaxTries = 10;
  if (entities.empty()) return std::nullopt;
  FakeCaption fake;
  size_t cursor = 0;
  for (const auto& span : entities) {
    fake.caption.insert(fake.caption.end(), caption.begin() + static_cast<long>(cursor),
                        caption.begin() + span.start);
    Tokens replacement = span.surface;
    auto it = pool.surfaces.find(span.etype);
    if (it != pool.surfaces.end()) {
      const auto& options = it->second;
      const bool has_other = std::any_of(options.begin(), options.end(),
                                         [&](const Tokens& s) { return !same_surface(s, span.surface); });
      if (has_other) {
        std::uniform_int_distribution<size_t> pick(0, options.size() - 1);
        for (int attempt = 0; attempt < kMaxTries; ++attempt) {
          const Tokens& candidate = options[pick(rng)];
          if (!same_surface(candidate, span.surface)) {
            replacement = candidate;
            break;
          }
        }
      }
    }
    EntitySpan out;
    out.start = static_cast<int>(fake.caption.size());
    out.end = out.start + static_cast<int>(replacement.size());
    out.etype = span.etype;
    out.surface = replacement;
    fake.caption.insert(fake.caption.end(), replacement.begin(), replacement.end());
    fake.entities.push_back(std::move(out));
    cursor = static_cast<size_t>(span.end);
  }
  fake.caption.insert(fake.caption.end(), caption.begin() + static_cast<long>(cursor), caption.end());
  return fake;
}

CorpusStats corpus_stats(const Corpus& corpus, const EntityTagger& tagger) {
  if (corpus.empty()) fail(ErrorKind::kValidation, "corpus_stats on an empty corpus");
  CorpusStats stats;
  stats.n_docs = corpus.size();
  size_t body_tokens = 0;
  size_t caption_tokens = 0;
  size_t with_entities = 0;
  std::map<std::string, size_t> label_tokens;
  for (const auto& doc : corpus) {
    body_tokens += doc.body.size();
    for (const auto& im : doc.images) {
      ++stats.n_images;
      caption_tokens += im.caption.size();
      auto spans = tagger.tag(im.caption);
      if (!spans.empty()) ++with_entities;
      for (const auto& s : spans) label_tokens[s.etype] += static_cast<size_t>(s.end - s.start);
    }
  }
  const double docs = static_cast<double>(stats.n_docs);
  stats.images_per_doc = static_cast<double>(stats.n_images) / docs;
  stats.avg_doc_len = static_cast<double>(body_tokens) / docs;
  if (stats.n_images > 0) {
    const double imgs = static_cast<double>(stats.n_images);
    stats.avg_cap_len = static_cast<double>(caption_tokens) / imgs;
    stats.pct_captions_with_entities = 100.0 * static_cast<double>(with_entities) / imgs;
  }
  if (caption_tokens > 0)
    for (const auto& [label, n] : label_tokens)
      stats.pos_tag_percentages[label] =
          100.0 * static_cast<double>(n) / static_cast<double>(caption_tokens);
  return stats;
}

}  // namespace concaps
