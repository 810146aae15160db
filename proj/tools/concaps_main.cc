// concaps command-line interface.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "concaps/checkpoint.h"
#include "concaps/cohscore.h"
#include "concaps/config.h"
#include "concaps/corpus.h"
#include "concaps/errors.h"
#include "concaps/feature_store.h"
#include "concaps/generate.h"
#include "concaps/synthetic.h"
#include "concaps/train.h"

namespace {

using concaps::ErrorKind;
using concaps::fail;
using ojson = nlohmann::ordered_json;

void emit(const ojson& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + out_path);
  out << j.dump(2) << '\n';
}

std::optional<bool> parse_switch(const std::string& v, const std::string& flag) {
  if (v == "auto") return std::nullopt;
  if (v == "on") return true;
  if (v == "off") return false;
  fail(ErrorKind::kConfig, flag + " must be auto, on or off");
}

std::vector<concaps::Split> parse_splits(const std::vector<std::string>& names) {
  std::vector<concaps::Split> out;
  for (const auto& n : names) out.push_back(concaps::parse_split(n));
  return out;
}

int window_tokens_of(const concaps::LoadedCheckpoint& ckpt, int flag) {
  if (flag > 0) return flag;
  return ckpt.extra.value("window_tokens", 512);
}

struct CohFlags {
  std::string features;
  std::string pairs = "all";
  int window_tokens = 0;
};

double corpus_coh_score(const std::string& checkpoint, int variant, const concaps::Corpus& corpus,
                        const std::map<std::string, std::vector<concaps::Tokens>>& captions,
                        const CohFlags& flags) {
  const concaps::LoadedCheckpoint ckpt = concaps::load_checkpoint(checkpoint);
  const concaps::FeatureStore store = concaps::FeatureStore::open(flags.features);
  const concaps::InputSource source(ckpt.model->spec(), ckpt.model->vocab(), store);
  return concaps::hori_coh_score(*ckpt.model, variant, corpus, captions, source,
                                 concaps::parse_pair_mode(flags.pairs),
                                 window_tokens_of(ckpt, flags.window_tokens))
      .mean;
}

std::map<std::string, std::vector<concaps::Tokens>> decoded_captions(
    const std::vector<concaps::DecodedCaption>& decoded, const concaps::Corpus& corpus) {
  std::map<std::pair<std::string, std::string>, const concaps::Tokens*> by_image;
  for (const auto& d : decoded) by_image[{d.doc_id, d.image_id}] = &d.caption;
  std::map<std::string, std::vector<concaps::Tokens>> out;
  for (const auto& doc : corpus) {
    std::vector<concaps::Tokens> caps;
    for (const auto& img : doc.images) {
      auto it = by_image.find({doc.doc_id, img.image_id});
      if (it == by_image.end()) break;
      caps.push_back(*it->second);
    }
    if (!caps.empty() && caps.size() == doc.images.size()) out[doc.doc_id] = std::move(caps);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concaps: coherent entity-aware captioning"};
  app.require_subcommand(1);

  // build-corpus
  concaps::SyntheticOptions syn;
  std::string syn_out;
  bool no_distractors = false;
  auto* build = app.add_subcommand("build-corpus", "Write a synthetic corpus, entity list and features");
  build->add_option("--out", syn_out, "Output directory")->required();
  build->add_option("--docs", syn.n_docs, "Number of documents");
  build->add_option("--images-per-doc", syn.images_per_doc, "Mean images per document");
  build->add_option("--min-images", syn.min_images);
  build->add_option("--max-images", syn.max_images);
  build->add_option("--test-fraction", syn.test_fraction);
  build->add_option("--dev-fraction", syn.dev_fraction);
  build->add_option("--no-entity-fraction", syn.no_entity_fraction);
  build->add_option("--noise", syn.noise);
  build->add_option("--seed", syn.seed);
  build->add_flag("--no-distractors", no_distractors, "Show only the main person in each image");

  // stats
  std::string stats_corpus, stats_entities, stats_out;
  auto* stats = app.add_subcommand("stats", "Corpus statistics as JSON");
  stats->add_option("--corpus", stats_corpus)->required();
  stats->add_option("--entities", stats_entities, "Entity TSV for tagging")->required();
  stats->add_option("--out", stats_out);

  // train
  std::string train_config, train_out;
  std::optional<int> train_steps;
  std::optional<uint64_t> train_seed;
  std::optional<double> train_lr;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a model from a JSON config");
  train->add_option("--config", train_config)->required();
  train->add_option("--out", train_out, "Run directory")->required();
  train->add_option("--steps", train_steps);
  train->add_option("--seed", train_seed);
  train->add_option("--lr", train_lr, "Peak learning rate");
  train->add_flag("--quiet", quiet);

  // generate
  std::string gen_ckpt, gen_corpus, gen_features, gen_out, gen_entities;
  std::string gen_vert = "auto", gen_hori = "auto", gen_head = "hori1";
  std::vector<std::string> gen_splits = {"test"};
  int gen_window_tokens = 0;
  concaps::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Decode captions with two-level beam search");
  generate->add_option("--checkpoint", gen_ckpt)->required();
  generate->add_option("--corpus", gen_corpus)->required();
  generate->add_option("--features", gen_features)->required();
  generate->add_option("--out", gen_out, "Decoded JSONL")->required();
  generate->add_option("--window,-W", gen.window, "Images decoded jointly");
  generate->add_option("--beam", gen.beam.beam_size, "Word-level beam size");
  generate->add_option("--candidates,-C", gen.beam.num_candidates, "Captions kept per image");
  generate->add_option("--caption-beam", gen.caption_beam, "Caption-level beam size");
  generate->add_option("--max-len", gen.beam.max_len, "Generated tokens, </s> included");
  generate->add_option("--head", gen_head, "hori1 or hori2");
  generate->add_option("--vert", gen_vert, "auto, on or off");
  generate->add_option("--hori", gen_hori, "auto, on or off");
  generate->add_option("--w-gen", gen.weights.gen);
  generate->add_option("--w-vert", gen.weights.vert);
  generate->add_option("--w-hori", gen.weights.hori);
  generate->add_option("--split", gen_splits);
  generate->add_option("--window-tokens", gen_window_tokens, "Default: the training value");

  // evaluate
  std::string ev_decoded, ev_corpus, ev_entities, ev_out, ev_coh1, ev_coh2;
  CohFlags ev_coh;
  auto* evaluate = app.add_subcommand("evaluate", "Score decoded captions against references");
  evaluate->add_option("--decoded", ev_decoded)->required();
  evaluate->add_option("--corpus", ev_corpus)->required();
  evaluate->add_option("--entities", ev_entities)->required();
  evaluate->add_option("--out", ev_out);
  evaluate->add_option("--coh1", ev_coh1, "Variant-1 coherence metric checkpoint");
  evaluate->add_option("--coh2", ev_coh2, "Variant-2 coherence metric checkpoint");
  evaluate->add_option("--features", ev_coh.features, "Feature store for the coherence metrics");
  evaluate->add_option("--pairs", ev_coh.pairs, "all or within-window");
  evaluate->add_option("--window-tokens", ev_coh.window_tokens);

  // cohscore
  std::string cs_ckpt, cs_corpus, cs_decoded, cs_out;
  int cs_variant = 1;
  CohFlags cs;
  std::vector<std::string> cs_splits = {"test"};
  auto* cohscore = app.add_subcommand("cohscore", "Horizontal coherence score of caption sets");
  cohscore->add_option("--checkpoint", cs_ckpt)->required();
  cohscore->add_option("--variant", cs_variant, "1 or 2");
  cohscore->add_option("--corpus", cs_corpus)->required();
  cohscore->add_option("--features", cs.features)->required();
  cohscore->add_option("--decoded", cs_decoded, "Decoded JSONL; default: the corpus captions");
  cohscore->add_option("--pairs", cs.pairs, "all or within-window");
  cohscore->add_option("--window-tokens", cs.window_tokens);
  cohscore->add_option("--split", cs_splits);
  cohscore->add_option("--out", cs_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*build) {
      syn.distractors = !no_distractors;
      const concaps::SyntheticCorpus data = concaps::generate_synthetic(syn);
      concaps::write_synthetic(data, syn_out);
      emit(ojson{{"out", syn_out}, {"documents", data.corpus.size()}, {"images", data.features.size()}},
           "");
    } else if (*stats) {
      const concaps::Corpus corpus = concaps::load_corpus(stats_corpus);
      const auto tagger = concaps::DictionaryTagger::load(stats_entities);
      const concaps::CorpusStats s = concaps::corpus_stats(corpus, tagger);
      ojson j;
      j["n_docs"] = s.n_docs;
      j["n_images"] = s.n_images;
      j["images_per_doc"] = s.images_per_doc;
      j["avg_doc_len"] = s.avg_doc_len;
      j["avg_cap_len"] = s.avg_cap_len;
      j["pct_captions_with_entities"] = s.pct_captions_with_entities;
      j["pos_tag_percentages"] = s.pos_tag_percentages;
      emit(j, stats_out);
    } else if (*train) {
      concaps::TrainConfig config = concaps::load_train_config(train_config);
      if (train_steps) config.total_steps = *train_steps;
      if (train_lr) config.optimizer.peak_lr = *train_lr;
      if (train_seed) config.seed = *train_seed;
      if (const char* env = std::getenv("CONCAPS_SEED")) {
        try {
          config.seed = std::stoull(env);
        } catch (const std::exception&) {
          fail(ErrorKind::kConfig, "CONCAPS_SEED must be an unsigned integer");
        }
      }
      const auto result = concaps::train_model(config, train_out, quiet ? nullptr : &std::cerr);
      const auto& last = result.steps.back();
      emit(ojson{{"checkpoint", result.checkpoint.string()},
                 {"manifest", result.manifest.string()},
                 {"steps", result.steps.size()},
                 {"final_loss", last.total}},
           "");
    } else if (*generate) {
      const concaps::LoadedCheckpoint ckpt = concaps::load_checkpoint(gen_ckpt);
      const concaps::Corpus corpus = concaps::load_corpus(gen_corpus);
      const concaps::FeatureStore store = concaps::FeatureStore::open(gen_features);
      const concaps::InputSource source(ckpt.model->spec(), ckpt.model->vocab(), store);
      if (gen_head == "hori1")
        gen.head = concaps::HoriHead::kHori1;
      else if (gen_head == "hori2")
        gen.head = concaps::HoriHead::kHori2;
      else
        fail(ErrorKind::kConfig, "--head must be hori1 or hori2");
      gen.use_vert = parse_switch(gen_vert, "--vert");
      gen.use_hori = parse_switch(gen_hori, "--hori");
      gen.splits = parse_splits(gen_splits);
      gen.window_tokens = window_tokens_of(ckpt, gen_window_tokens);
      const auto decoded = concaps::generate_captions(*ckpt.model, corpus, source, gen);
      concaps::write_decoded(decoded, std::filesystem::path(gen_out));
      emit(ojson{{"out", gen_out}, {"captions", decoded.size()}}, "");
    } else if (*evaluate) {
      const concaps::Corpus corpus = concaps::load_corpus(ev_corpus);
      const auto tagger = concaps::DictionaryTagger::load(ev_entities);
      const auto decoded = concaps::read_decoded(std::filesystem::path(ev_decoded));
      concaps::MetricReport report = concaps::evaluate_decoded(decoded, corpus, tagger);
      if (!ev_coh1.empty() || !ev_coh2.empty()) {
        if (ev_coh.features.empty()) fail(ErrorKind::kConfig, "--features is required with --coh1/--coh2");
        const auto caps = decoded_captions(decoded, corpus);
        if (!ev_coh1.empty()) report.hori_coh_1 = corpus_coh_score(ev_coh1, 1, corpus, caps, ev_coh);
        if (!ev_coh2.empty()) report.hori_coh_2 = corpus_coh_score(ev_coh2, 2, corpus, caps, ev_coh);
      }
      ojson j = concaps::report_to_json(report);
      j["corpus"] = std::filesystem::path(ev_corpus).filename().string();
      j["decoded"] = std::filesystem::path(ev_decoded).filename().string();
      emit(j, ev_out);
    } else if (*cohscore) {
      concaps::Corpus corpus = concaps::load_corpus(cs_corpus);
      const auto splits = parse_splits(cs_splits);
      std::erase_if(corpus, [&](const concaps::Document& d) {
        return std::find(splits.begin(), splits.end(), d.split) == splits.end();
      });
      const auto captions = cs_decoded.empty()
                                ? concaps::reference_captions(corpus)
                                : decoded_captions(concaps::read_decoded(std::filesystem::path(cs_decoded)), corpus);
      const concaps::LoadedCheckpoint ckpt = concaps::load_checkpoint(cs_ckpt);
      const concaps::FeatureStore store = concaps::FeatureStore::open(cs.features);
      const concaps::InputSource source(ckpt.model->spec(), ckpt.model->vocab(), store);
      const auto result = concaps::hori_coh_score(*ckpt.model, cs_variant, corpus, captions, source,
                                                  concaps::parse_pair_mode(cs.pairs),
                                                  window_tokens_of(ckpt, cs.window_tokens));
      ojson j;
      j["variant"] = cs_variant;
      j["pairs"] = cs.pairs;
      j["score"] = result.mean;
      j["documents"] = result.per_document.size();
      j["per_document"] = result.per_document;
      emit(j, cs_out);
    }
  } catch (const concaps::Error& e) {
    std::cerr << ojson{{"error", std::string(concaps::error_kind_name(e.kind()))}, {"message", e.what()}}.dump()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << ojson{{"error", "internal_error"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
