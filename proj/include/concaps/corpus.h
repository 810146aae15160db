#ifndef CONCAPS_CORPUS_H_
#define CONCAPS_CORPUS_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concaps/autograd.h"
#include "concaps/text.h"

namespace concaps {

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

// Caption tokens [start, end) tagged with an entity type.
struct EntitySpan {
  int start = 0;
  int end = 0;
  std::string etype;
  Tokens surface;

  bool operator==(const EntitySpan&) const = default;
};

struct ImageRecord {
  std::string image_id;
  int position = 0;  // offset into the document body
  Tokens caption;
  std::vector<EntitySpan> entities;
  std::string feature_key;
};

struct Document {
  std::string doc_id;
  Tokens title;
  Tokens body;
  std::vector<ImageRecord> images;  // ordered by position
  Split split = Split::kTrain;
};

using Corpus = std::vector<Document>;

// One JSON document per line. Blank lines are skipped. Images are re-sorted
// by position (stable). Errors name the offending 1-based line.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string document_to_json_line(const Document& doc);

struct TokenRange {
  size_t begin = 0;
  size_t end = 0;
};

// Window of at most `window_tokens` body tokens around `position`: floor(w/2)
// before and ceil(w/2) after, shifted inward at the body boundaries.
TokenRange context_window_range(size_t body_len, size_t position, int window_tokens);

// img_index is 1-based.
Tokens extract_context_window(const Document& doc, int img_index, int window_tokens = 512);

class EntityTagger {
 public:
  virtual ~EntityTagger() = default;
  // Non-overlapping spans in increasing order.
  virtual std::vector<EntitySpan> tag(std::span<const std::string> tokens) const = 0;
};

// Greedy longest match, left to right, case-insensitive.
class DictionaryTagger : public EntityTagger {
 public:
  DictionaryTagger() = default;

  // TSV lines "surface<TAB>etype"; '#' lines and blank lines are ignored.
  static DictionaryTagger parse(std::istream& in);
  static DictionaryTagger load(const std::filesystem::path& path);

  void add(std::string_view surface, std::string_view etype);
  std::vector<EntitySpan> tag(std::span<const std::string> tokens) const override;
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::vector<std::string>, std::string> entries_;  // lowercased surface -> etype
  size_t longest_ = 0;
};

void tag_corpus(Corpus& corpus, const EntityTagger& tagger);

// Distinct entity surfaces per type from the training split's captions.
struct EntityPool {
  std::map<std::string, std::vector<Tokens>> surfaces;

  static EntityPool build(const Corpus& corpus);
};

struct FakeCaption {
  Tokens caption;
  std::vector<EntitySpan> entities;
};

// Replaces every entity surface with a different same-typed surface drawn
// uniformly from the pool. Returns nullopt for captions without entities.
std::optional<FakeCaption> make_fake_caption(std::span<const std::string> caption,
                                             std::span<const EntitySpan> entities,
                                             const EntityPool& pool, Rng& rng);

struct CorpusStats {
  double images_per_doc = 0;
  size_t n_images = 0;
  size_t n_docs = 0;
  double avg_doc_len = 0;
  double avg_cap_len = 0;
  double pct_captions_with_entities = 0;
  // Share of caption tokens covered by each tagger label, in percent.
  std::map<std::string, double> pos_tag_percentages;
};

CorpusStats corpus_stats(const Corpus& corpus, const EntityTagger& tagger);

}  // namespace concaps

#endif  // CONCAPS_CORPUS_H_
