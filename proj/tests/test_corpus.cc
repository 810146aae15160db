#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "concaps/corpus.h"
#include "concaps/errors.h"
#include "test_util.h"

using namespace concaps;

namespace {

std::string doc_line(const std::string& id, const std::string& split, const std::string& body,
                     const std::vector<std::pair<int, std::string>>& images) {
  nlohmann::ordered_json j;
  j["doc_id"] = id;
  j["split"] = split;
  j["title"] = "t";
  j["body"] = body;
  j["images"] = nlohmann::ordered_json::array();
  int n = 0;
  for (const auto& [pos, cap] : images)
    j["images"].push_back({{"image_id", "i" + std::to_string(++n)},
                           {"position", pos},
                           {"caption", cap},
                           {"feature_key", id + "_" + std::to_string(n)}});
  return j.dump();
}

Document body_doc(size_t len, std::vector<int> positions) {
  Document d;
  d.doc_id = "d";
  for (size_t i = 0; i < len; ++i) d.body.push_back("w" + std::to_string(i));
  for (int p : positions) {
    ImageRecord r;
    r.position = p;
    d.images.push_back(r);
  }
  return d;
}

}  // namespace

TEST_CASE("vocab reserves the four special ids") {
  const Vocab v = Vocab::build({tokenize("Anna met anna")});
  CHECK(v.token(0) == "<s>");
  CHECK(v.token(1) == "</s>");
  CHECK(v.token(2) == "<unk>");
  CHECK(v.token(3) == "<pad>");
  CHECK(v.size() == 6);
  CHECK(v.id("ANNA") == v.id("anna"));
  CHECK(v.id("zebra") == Vocab::kUnk);
  const auto ids = v.encode_caption(tokenize("anna met"));
  CHECK(ids.front() == Vocab::kBos);
  CHECK(ids.back() == Vocab::kEos);
  CHECK(join_tokens(v.decode(ids)) == "anna met");
  CHECK_THROWS_AS(Vocab::from_tokens({"a", "b"}), Error);
}

TEST_CASE("single document round trip keeps images ordered by position") {
  std::istringstream in(doc_line("d1", "dev", "a b c d e", {{4, "late caption"}, {1, "early"}}));
  const Corpus c = parse_corpus(in);
  REQUIRE(c.size() == 1);
  REQUIRE(c[0].images.size() == 2);
  CHECK(c[0].images[0].position == 1);
  CHECK(c[0].images[1].position == 4);
  CHECK(c[0].split == Split::kDev);

  std::ostringstream out;
  write_corpus(c, out);
  std::istringstream again(out.str());
  const Corpus c2 = parse_corpus(again);
  std::ostringstream out2;
  write_corpus(c2, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("position past the body is rejected") {
  std::istringstream in(doc_line("d1", "train", "a b c", {{4, "x"}}));
  try {
    parse_corpus(in);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
  }
  std::istringstream edge(doc_line("d1", "train", "a b c", {{3, "x"}}));
  CHECK(parse_corpus(edge).size() == 1);
}

TEST_CASE("malformed line names its line number") {
  std::istringstream in(doc_line("d1", "train", "a", {}) + "\n\n{not json\n");
  try {
    parse_corpus(in);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("duplicate doc ids are rejected") {
  std::istringstream in(doc_line("d1", "train", "a", {}) + "\n" + doc_line("d1", "test", "b", {}));
  try {
    parse_corpus(in);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
  }
}

TEST_CASE("ten document file matches a line by line reference parse") {
  std::string text;
  const char* splits[] = {"train", "dev", "test"};
  for (int i = 0; i < 10; ++i)
    text += doc_line("doc" + std::to_string(i), splits[i % 3], "x y z w v",
                     {{i % 5, "cap " + std::to_string(i)}, {2, "second"}}) + "\n";
  std::istringstream in(text);
  const Corpus c = parse_corpus(in);
  REQUIRE(c.size() == 10);
  std::istringstream lines(text);
  std::string line;
  size_t k = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(c[k].doc_id == j["doc_id"].get<std::string>());
    CHECK(split_name(c[k].split) == j["split"].get<std::string>());
    CHECK(c[k].images.size() == j["images"].size());
    ++k;
  }
}

TEST_CASE("context window arithmetic") {
  const Document d = body_doc(1000, {500, 10, 999});
  const TokenRange r = context_window_range(1000, 500, 512);
  CHECK(r.begin == 244);
  CHECK(r.end == 756);
  const TokenRange left = context_window_range(1000, 10, 512);
  CHECK(left.begin == 0);
  CHECK(left.end == 512);
  CHECK(extract_context_window(d, 1, 512).front() == "w244");
  CHECK(extract_context_window(d, 3, 512).back() == "w999");
  CHECK(extract_context_window(d, 3, 512).size() == 512);
  const Document small = body_doc(300, {123});
  CHECK(extract_context_window(small, 1, 512).size() == 300);
  CHECK_THROWS_AS(extract_context_window(d, 0, 512), Error);
  CHECK_THROWS_AS(extract_context_window(d, 4, 512), Error);
}

TEST_CASE("context window matches a brute-force boundary oracle") {
  for (size_t len = 0; len <= 14; ++len)
    for (size_t pos = 0; pos <= len; ++pos)
      for (int w = 2; w <= 16; ++w) {
        // Oracle: among all windows of length min(w, len) inside the body,
        // the one whose start is closest to pos - floor(w/2).
        const size_t n = std::min<size_t>(static_cast<size_t>(w), len);
        const long want = static_cast<long>(pos) - w / 2;
        size_t best = 0;
        long best_gap = -1;
        for (size_t s = 0; s + n <= len; ++s) {
          const long gap = std::labs(static_cast<long>(s) - want);
          if (best_gap < 0 || gap < best_gap) {
            best = s;
            best_gap = gap;
          }
        }
        const TokenRange r = context_window_range(len, pos, w);
        CHECK(r.begin == best);
        CHECK(r.end == best + n);
        CHECK(r.end - r.begin <= std::min<size_t>(static_cast<size_t>(w), len));
      }
}

TEST_CASE("dictionary tagger") {
  DictionaryTagger t;
  t.add("Juno", "PRODUCT");
  t.add("New York", "GPE");
  t.add("York", "GPE");
  const auto spans = t.tag(tokenize("Juno launches"));
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].start == 0);
  CHECK(spans[0].end == 1);
  CHECK(spans[0].etype == "PRODUCT");
  CHECK(t.tag(Tokens{}).empty());
  const auto ny = t.tag(tokenize("flights to new york and york"));
  REQUIRE(ny.size() == 2);
  CHECK(ny[0].start == 2);
  CHECK(ny[0].end == 4);
  CHECK(ny[1].start == 5);
  CHECK(ny[1].end == 6);

  std::istringstream tsv("# comment\nAnna Keller\tPERSON\n\nParis\tGPE\n");
  const DictionaryTagger loaded = DictionaryTagger::parse(tsv);
  CHECK(loaded.size() == 2);
}

TEST_CASE("greedy longest match equals a brute-force alignment oracle") {
  const std::vector<std::string> words = {"a", "b", "c"};
  DictionaryTagger t;
  const std::vector<Tokens> entries = {{"a"}, {"a", "b"}, {"b", "c"}, {"c"}, {"a", "b", "c"}};
  // Oracle: at each position take the longest dictionary entry starting there.
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    DictionaryTagger dict;
    std::vector<Tokens> active;
    for (const auto& e : entries)
      if (rng() % 2) {
        dict.add(join_tokens(e), "X");
        active.push_back(e);
      }
    Tokens sentence;
    const size_t len = rng() % 7;
    for (size_t i = 0; i < len; ++i) sentence.push_back(words[rng() % 3]);
    std::vector<std::pair<int, int>> want;
    for (size_t i = 0; i < sentence.size();) {
      size_t best = 0;
      for (const auto& e : active)
        if (i + e.size() <= sentence.size() &&
            std::equal(e.begin(), e.end(), sentence.begin() + static_cast<long>(i)))
          best = std::max(best, e.size());
      if (best > 0) {
        want.emplace_back(static_cast<int>(i), static_cast<int>(i + best));
        i += best;
      } else {
        ++i;
      }
    }
    std::vector<std::pair<int, int>> got;
    for (const auto& s : dict.tag(sentence)) got.emplace_back(s.start, s.end);
    CHECK(got == want);
  }
}

TEST_CASE("fake captions replace entities with other same-typed surfaces") {
  DictionaryTagger t;
  t.add("Juno", "PRODUCT");
  t.add("Jupiter", "PLANET");
  EntityPool pool;
  pool.surfaces["PRODUCT"] = {{"Juno"}, {"Anna", "Lee"}};
  pool.surfaces["PLANET"] = {{"Jupiter"}, {"Romeo"}};
  const Tokens cap = tokenize("Nasa will launch Juno to Jupiter");
  const auto spans = t.tag(cap);
  Rng rng(11);
  const auto fake = make_fake_caption(cap, spans, pool, rng);
  REQUIRE(fake);
  CHECK(join_tokens(fake->caption) == "Nasa will launch Anna Lee to Romeo");
  REQUIRE(fake->entities.size() == 2);
  CHECK(fake->entities[0].start == 3);
  CHECK(fake->entities[0].end == 5);
  CHECK(fake->entities[1].start == 6);
  for (const auto& e : fake->entities)
    CHECK(Tokens(fake->caption.begin() + e.start, fake->caption.begin() + e.end) == e.surface);

  CHECK_FALSE(make_fake_caption(tokenize("no names here"), {}, pool, rng));

  EntityPool lonely;
  lonely.surfaces["PRODUCT"] = {{"Juno"}};
  const Tokens juno = tokenize("Juno flies");
  const auto same = make_fake_caption(juno, t.tag(juno), lonely, rng);
  REQUIRE(same);
  CHECK(same->caption == juno);
}

TEST_CASE("seeded fake caption replays by hand") {
  EntityPool pool;
  pool.surfaces["PRODUCT"] = {{"Juno"}, {"Voyager"}};
  const Tokens cap = tokenize("launch of Juno");
  const std::vector<EntitySpan> spans = {EntitySpan{2, 3, "PRODUCT", {"Juno"}}};
  Rng a(5), b(5);
  const auto fake = make_fake_caption(cap, spans, pool, a);
  REQUIRE(fake);
  // Replay: uniform draws over the two surfaces until one differs from Juno.
  std::uniform_int_distribution<size_t> pick(0, 1);
  std::string expect = "Juno";
  for (int i = 0; i < 10; ++i)
    if (pick(b) == 1) {
      expect = "Voyager";
      break;
    }
  CHECK(join_tokens(fake->caption) == "launch of " + expect);
  CHECK(expect == "Voyager");
}

TEST_CASE("fake captions keep non-entity tokens in order") {
  DictionaryTagger t;
  for (const auto& n : {"Anna", "Boris", "Carla"}) t.add(n, "PERSON");
  for (const auto& n : {"Paris", "Oslo"}) t.add(n, "GPE");
  EntityPool pool;
  pool.surfaces["PERSON"] = {{"Anna"}, {"Boris"}, {"Carla", "Diaz"}};
  pool.surfaces["GPE"] = {{"Paris"}, {"Oslo"}, {"New", "York"}};
  Rng rng(2);
  const std::vector<std::string> words = {"Anna", "Boris", "Paris", "Oslo", "met", "in", "the"};
  for (int trial = 0; trial < 100; ++trial) {
    Tokens cap;
    for (int i = 0; i < 6; ++i) cap.push_back(words[rng() % words.size()]);
    const auto spans = t.tag(cap);
    Rng r1(trial), r2(trial);
    const auto f1 = make_fake_caption(cap, spans, pool, r1);
    const auto f2 = make_fake_caption(cap, spans, pool, r2);
    if (spans.empty()) {
      CHECK_FALSE(f1);
      continue;
    }
    REQUIRE(f1);
    CHECK(f1->caption == f2->caption);
    Tokens plain_true, plain_fake;
    size_t cursor = 0;
    for (const auto& s : spans) {
      plain_true.insert(plain_true.end(), cap.begin() + static_cast<long>(cursor), cap.begin() + s.start);
      cursor = static_cast<size_t>(s.end);
    }
    plain_true.insert(plain_true.end(), cap.begin() + static_cast<long>(cursor), cap.end());
    cursor = 0;
    for (const auto& s : f1->entities) {
      plain_fake.insert(plain_fake.end(), f1->caption.begin() + static_cast<long>(cursor),
                        f1->caption.begin() + s.start);
      cursor = static_cast<size_t>(s.end);
    }
    plain_fake.insert(plain_fake.end(), f1->caption.begin() + static_cast<long>(cursor), f1->caption.end());
    CHECK(plain_true == plain_fake);
    for (size_t k = 0; k < spans.size(); ++k) CHECK(f1->entities[k].surface != spans[k].surface);
  }
}

TEST_CASE("entity pool holds distinct training surfaces only") {
  Corpus c(2);
  c[0].split = Split::kTrain;
  c[1].split = Split::kTest;
  ImageRecord a;
  a.entities = {EntitySpan{0, 1, "PERSON", {"Anna"}}, EntitySpan{1, 2, "PERSON", {"Anna"}}};
  ImageRecord b;
  b.entities = {EntitySpan{0, 1, "PERSON", {"Zed"}}};
  c[0].images = {a};
  c[1].images = {b};
  const EntityPool pool = EntityPool::build(c);
  REQUIRE(pool.surfaces.count("PERSON") == 1);
  CHECK(pool.surfaces.at("PERSON").size() == 1);
}

TEST_CASE("corpus statistics arithmetic") {
  DictionaryTagger t;
  t.add("Anna", "PERSON");
  Corpus c(2);
  c[0].body = tokenize("a b c d");
  c[1].body = tokenize("a b");
  for (int i = 0; i < 3; ++i) c[0].images.push_back(ImageRecord{"i", 0, tokenize("Anna waves"), {}, "k"});
  for (int i = 0; i < 5; ++i) c[1].images.push_back(ImageRecord{"i", 0, tokenize("Anna"), {}, "k"});
  const CorpusStats s = corpus_stats(c, t);
  CHECK(s.images_per_doc == doctest::Approx(4.0));
  CHECK(s.n_images == 8);
  CHECK(s.avg_doc_len == doctest::Approx(3.0));
  CHECK(s.avg_cap_len == doctest::Approx(11.0 / 8.0));
  CHECK(s.pct_captions_with_entities == doctest::Approx(100.0));
  CHECK(s.pos_tag_percentages.at("PERSON") == doctest::Approx(800.0 / 11.0));
  CHECK_THROWS_AS(corpus_stats(Corpus{}, t), Error);
}
