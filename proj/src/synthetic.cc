#include "concaps/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "concaps/errors.h"

namespace concaps {

namespace {

const std::vector<std::string> kPeople = {
    "Anna Keller",  "Boris Lang",   "Carla Mendes", "David Okafor", "Elena Rossi",  "Felix Braun",
    "Grace Liu",    "Hugo Martin",  "Irene Novak",  "Jonas Berg",   "Karin Holm",   "Luis Ortega",
    "Maya Singh",   "Nils Petersen", "Olga Ivanova", "Pedro Alves"};
const std::vector<std::string> kPlaces = {"Paris", "Berlin", "New York", "Cairo",
                                          "Lima",  "Oslo",   "Hong Kong", "Nairobi"};
const std::vector<std::string> kOrgs = {"Red Cross", "NATO",     "UNESCO",
                                        "World Bank", "Interpol", "FIFA"};
const std::vector<std::string> kFiller = {"the",   "report", "said",  "officials", "later",
                                          "added", "that",   "local", "news",      "on"};
const std::vector<std::string> kCorePad = {"on", "monday", "during", "a", "busy", "week"};

constexpr int kPreTokens = 6;
constexpr int kCoreTokens = kSyntheticWindow;
constexpr int kEvents = 5;

struct Prototypes {
  std::map<std::string, RowVector> image, face;
  std::vector<RowVector> event_image, event_object;
};

RowVector gaussian(int width, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  RowVector v(width);
  for (int i = 0; i < width; ++i) v[i] = normal(rng);
  return v;
}

Prototypes make_prototypes(const SyntheticOptions& o) {
  Rng rng(o.seed ^ 0x5DEECE66DULL);
  Prototypes p;
  for (const auto* list : {&kPeople, &kPlaces, &kOrgs})
    for (const auto& name : *list) {
      p.image[name] = gaussian(o.raw_image, rng);
      p.face[name] = gaussian(o.raw_face, rng);
    }
  for (int e = 0; e < kEvents; ++e) {
    p.event_image.push_back(gaussian(o.raw_image, rng));
    p.event_object.push_back(gaussian(o.raw_object, rng));
  }
  return p;
}

void append(Tokens& out, const std::string& text) {
  for (auto& t : tokenize(text)) out.push_back(std::move(t));
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

Tokens caption_for(int event, const std::string& person, const std::string& place,
                   const std::string& org) {
  Tokens c;
  switch (event) {
    case 0: append(c, person + " speaks at a rally in " + place); break;
    case 1: append(c, person + " arrives for a meeting with " + org + " officials"); break;
    case 2: append(c, person + " poses for a photo"); break;
    case 3: append(c, person + " talks to reporters"); break;
    default: append(c, "a crowd gathers outside the hall"); break;
  }
  return c;
}

}  // namespace

void SyntheticOptions::validate() const {
  if (n_docs < 1) fail(ErrorKind::kConfig, "n_docs must be positive");
  if (min_images < 1 || max_images < min_images)
    fail(ErrorKind::kConfig, "need 1 <= min_images <= max_images");
  if (images_per_doc < min_images || images_per_doc > max_images)
    fail(ErrorKind::kConfig, "images_per_doc must lie in [min_images, max_images]");
  if (max_images > static_cast<int>(kPeople.size()) - 1)
    fail(ErrorKind::kConfig, "max_images exceeds the distractor pool");
  if (dev_fraction < 0 || test_fraction < 0 || dev_fraction + test_fraction >= 1.0)
    fail(ErrorKind::kConfig, "split fractions must be non-negative and leave a training split");
  if (no_entity_fraction < 0 || no_entity_fraction > 1)
    fail(ErrorKind::kConfig, "no_entity_fraction must be in [0, 1]");
  if (image_patches < 1 || raw_image < 1 || raw_face < 1 || raw_object < 1)
    fail(ErrorKind::kConfig, "feature widths must be positive");
  if (noise < 0) fail(ErrorKind::kConfig, "noise must be non-negative");
}

std::vector<int> images_per_document(int n_docs, double mean, int min_images, int max_images,
                                     Rng& rng) {
  const long total = std::lround(mean * n_docs);
  if (total < static_cast<long>(min_images) * n_docs || total > static_cast<long>(max_images) * n_docs)
    fail(ErrorKind::kConfig, "image count mean is outside [min_images, max_images]");
  std::vector<int> counts(static_cast<size_t>(n_docs), min_images);
  std::vector<int> open(static_cast<size_t>(n_docs));
  for (int i = 0; i < n_docs; ++i) open[static_cast<size_t>(i)] = i;
  for (long extra = total - static_cast<long>(min_images) * n_docs; extra > 0; --extra) {
    std::uniform_int_distribution<size_t> d(0, open.size() - 1);
    const size_t slot = d(rng);
    const int doc = open[slot];
    if (++counts[static_cast<size_t>(doc)] == max_images) open.erase(open.begin() + static_cast<long>(slot));
  }
  return counts;
}

SyntheticCorpus generate_synthetic(const SyntheticOptions& o) {
  o.validate();
  Rng rng(o.seed);
  const Prototypes proto = make_prototypes(o);
  const std::vector<int> counts = images_per_document(o.n_docs, o.images_per_doc, o.min_images,
                                                      o.max_images, rng);
  const int n_test = static_cast<int>(std::lround(o.test_fraction * o.n_docs));
  const int n_dev = static_cast<int>(std::lround(o.dev_fraction * o.n_docs));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, o.noise);

  SyntheticCorpus out;
  for (const auto& p : kPeople) out.entities.emplace_back(p, "PERSON");
  for (const auto& p : kPlaces) out.entities.emplace_back(p, "GPE");
  for (const auto& p : kOrgs) out.entities.emplace_back(p, "ORG");

  char id[32];
  for (int d = 0; d < o.n_docs; ++d) {
    Document doc;
    std::snprintf(id, sizeof id, "doc%04d", d + 1);
    doc.doc_id = id;
    if (d >= o.n_docs - n_test)
      doc.split = Split::kTest;
    else if (d >= o.n_docs - n_test - n_dev)
      doc.split = Split::kDev;

    std::vector<std::string> people = kPeople;
    std::shuffle(people.begin(), people.end(), rng);
    const std::string& main_person = people[0];
    const std::string& place = pick(kPlaces, rng);
    const std::string& org = pick(kOrgs, rng);
    append(doc.title, "news from " + place);

    for (int k = 0; k < counts[static_cast<size_t>(d)]; ++k) {
      const std::string& other = o.distractors ? people[static_cast<size_t>(k) + 1] : main_person;
      const bool main_first = unit(rng) < 0.5;
      const std::string& first = main_first ? main_person : other;
      const std::string& second = main_first ? other : main_person;

      for (int i = 0; i < kPreTokens; ++i) doc.body.push_back(pick(kFiller, rng));
      const size_t core_start = doc.body.size();
      Tokens core;
      append(core, first + " spoke with " + second + " in " + place + " for " + org);
      for (size_t i = 0; core.size() < static_cast<size_t>(kCoreTokens); ++i)
        core.push_back(kCorePad[i % kCorePad.size()]);
      doc.body.insert(doc.body.end(), core.begin(), core.end());
      while (doc.body.size() % kSegmentTokens != 0) doc.body.push_back(pick(kFiller, rng));

      const int event = unit(rng) < o.no_entity_fraction
                            ? kEvents - 1
                            : std::uniform_int_distribution<int>(0, kEvents - 2)(rng);
      ImageRecord img;
      std::snprintf(id, sizeof id, "img%d", k + 1);
      img.image_id = id;
      img.position = static_cast<int>(core_start) + kCoreTokens / 2;
      img.caption = caption_for(event, main_person, place, org);
      img.feature_key = doc.doc_id + "_" + img.image_id;

      FeatureBundle f;
      f.text = Matrix(0, 0);
      f.image = Matrix(o.image_patches, o.raw_image);
      for (int r = 0; r < o.image_patches; ++r)
        for (int c = 0; c < o.raw_image; ++c)
          f.image(r, c) = proto.image.at(main_person)[c] + proto.image.at(other)[c] +
                          proto.image.at(place)[c] + proto.event_image[static_cast<size_t>(event)][c] +
                          noise(rng);
      const int n_faces = o.distractors ? 2 : 1;
      f.faces = Matrix(n_faces, o.raw_face);
      for (int r = 0; r < n_faces; ++r) {
        const std::string& who = r == 0 ? first : second;
        for (int c = 0; c < o.raw_face; ++c) f.faces(r, c) = proto.face.at(who)[c] + noise(rng);
      }
      f.objects = Matrix(1, o.raw_object);
      for (int c = 0; c < o.raw_object; ++c)
        f.objects(0, c) = proto.event_object[static_cast<size_t>(event)][c] + noise(rng);
      out.features[img.feature_key] = std::move(f);
      doc.images.push_back(std::move(img));
    }
    out.corpus.push_back(std::move(doc));
  }
  return out;
}

void write_synthetic(const SyntheticCorpus& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_corpus(data.corpus, dir / "corpus.jsonl");
  {
    std::ofstream out(dir / "entities.tsv", std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + (dir / "entities.tsv").string());
    for (const auto& [surface, etype] : data.entities) out << surface << '\t' << etype << '\n';
  }
  FeatureStore store = FeatureStore::create(dir / "features");
  for (const auto& [key, bundle] : data.features) store.put(key, bundle);
  store.save_manifest();
}

}  // namespace concaps
