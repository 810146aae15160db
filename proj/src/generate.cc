#include "concaps/generate.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "concaps/errors.h"

namespace concaps {

namespace {

RowVector concat(const RowVector& a, const RowVector& b) {
  RowVector out(a.size() + b.size());
  out << a, b;
  return out;
}

bool wants(const std::vector<Split>& splits, Split s) {
  return std::find(splits.begin(), splits.end(), s) != splits.end();
}

}  // namespace

VertScoreFn vert_score_fn(const CaptionModel& model) {
  return [&model](const RowVector& state) { return model.vert_scorer().score(state); };
}

HoriScoreFn hori_score_fn(const CaptionModel& model, HoriHead head) {
  const PairScorer& scorer = head == HoriHead::kHori1 ? model.hori1_scorer() : model.hori2_scorer();
  return [&scorer](const RowVector& a, const RowVector& b) { return scorer.score(concat(a, b)); };
}

std::vector<CaptionHypothesis> image_candidates(const CaptionModel& model, const ModelInput& input,
                                                const BeamOptions& beam, const VertScoreFn& vert,
                                                const ScoreWeights& weights) {
  const ModelStepper stepper(model, input);
  BeamOptions bounded = beam;
  bounded.max_len = std::min(beam.max_len, model.spec().model.max_len - 2);
  if (bounded.max_len < 1) fail(ErrorKind::kConfig, "decoder max_len too small to generate");
  BeamResult result = word_beam_search(stepper, bounded);
  std::vector<CaptionHypothesis> out;
  for (CaptionHypothesis& h : result.hypotheses)
    out.push_back(vert_rescore(std::move(h), stepper, vert, weights));
  return out;
}

std::vector<DecodedCaption> decode_document(const CaptionModel& model, const Document& doc,
                                            const InputSource& source,
                                            const GenerateOptions& options) {
  if (options.window < 1) fail(ErrorKind::kConfig, "window must be >= 1");
  const CoherenceConfig& coh = model.spec().coherence;
  const double head_lambda = options.head == HoriHead::kHori1 ? coh.lambda_hori1 : coh.lambda_hori2;
  const bool use_vert = options.use_vert.value_or(coh.lambda_vert > 0.0);
  const bool use_hori = options.use_hori.value_or(head_lambda > 0.0);
  const VertScoreFn vert = use_vert ? vert_score_fn(model) : VertScoreFn{};
  const HoriScoreFn hori = use_hori ? hori_score_fn(model, options.head) : HoriScoreFn{};

  std::vector<DecodedCaption> out;
  const size_t n = doc.images.size();
  for (size_t start = 0; start < n; start += static_cast<size_t>(options.window)) {
    const size_t end = std::min(n, start + static_cast<size_t>(options.window));
    std::vector<std::vector<CaptionHypothesis>> per_image;
    for (size_t k = start; k < end; ++k) {
      const Tokens text = extract_context_window(doc, static_cast<int>(k + 1), options.window_tokens);
      const ModelInput input = source.make(text, doc.images[k].feature_key);
      per_image.push_back(image_candidates(model, input, options.beam, vert, options.weights));
    }
    const CaptionSequence seq = caption_beam_search(per_image, hori, options.caption_beam, options.weights);
    for (size_t k = start; k < end; ++k) {
      const CaptionHypothesis& h = seq.chosen[k - start];
      DecodedCaption d;
      d.doc_id = doc.doc_id;
      d.image_id = doc.images[k].image_id;
      d.caption = model.vocab().decode(h.tokens);
      d.gen_score = h.gen_score;
      d.vert_score = h.vert_score;
      d.seq_score = seq.seq_score;
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<DecodedCaption> generate_captions(const CaptionModel& model, const Corpus& corpus,
                                              const InputSource& source,
                                              const GenerateOptions& options) {
  std::vector<DecodedCaption> out;
  for (const Document& doc : corpus) {
    if (!wants(options.splits, doc.split)) continue;
    auto decoded = decode_document(model, doc, source, options);
    out.insert(out.end(), decoded.begin(), decoded.end());
  }
  return out;
}

void write_decoded(const std::vector<DecodedCaption>& decoded, std::ostream& out) {
  for (const DecodedCaption& d : decoded) {
    nlohmann::ordered_json j;
    j["doc_id"] = d.doc_id;
    j["image_id"] = d.image_id;
    j["caption"] = join_tokens(d.caption);
    j["gen_score"] = d.gen_score;
    j["vert_score"] = d.vert_score;
    j["seq_score"] = d.seq_score;
    out << j.dump() << '\n';
  }
}

void write_decoded(const std::vector<DecodedCaption>& decoded, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  write_decoded(decoded, out);
}

std::vector<DecodedCaption> read_decoded(std::istream& in) {
  std::vector<DecodedCaption> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DecodedCaption d;
      d.doc_id = j.at("doc_id").get<std::string>();
      d.image_id = j.at("image_id").get<std::string>();
      d.caption = tokenize(j.at("caption").get<std::string>());
      d.gen_score = j.value("gen_score", 0.0);
      d.vert_score = j.value("vert_score", 0.0);
      d.seq_score = j.value("seq_score", 0.0);
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DecodedCaption> read_decoded(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kNotFound, "cannot open " + path.string());
  return read_decoded(in);
}

MetricReport evaluate_decoded(const std::vector<DecodedCaption>& decoded, const Corpus& corpus,
                              const EntityTagger& tagger) {
  std::map<std::pair<std::string, std::string>, const Tokens*> refs;
  for (const Document& doc : corpus)
    for (const ImageRecord& img : doc.images) refs[{doc.doc_id, img.image_id}] = &img.caption;

  std::vector<Tokens> cands, golds;
  std::set<std::string> docs;
  for (const DecodedCaption& d : decoded) {
    auto it = refs.find({d.doc_id, d.image_id});
    if (it == refs.end())
      fail(ErrorKind::kNotFound, "no reference for " + d.doc_id + "/" + d.image_id);
    cands.push_back(d.caption);
    golds.push_back(*it->second);
    docs.insert(d.doc_id);
  }
  MetricReport r;
  r.bleu4 = bleu4(cands, golds);
  r.rouge_l = rouge_l(cands, golds);
  r.cider = cider(cands, golds);
  const EntityScores ne = ne_precision_recall(cands, golds, tagger);
  r.ne_precision = ne.precision;
  r.ne_recall = ne.recall;
  r.n_captions = cands.size();
  r.n_documents = docs.size();
  return r;
}

nlohmann::ordered_json report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["bleu4"] = r.bleu4;
  j["rouge_l"] = r.rouge_l;
  j["cider"] = r.cider;
  j["ne_precision"] = r.ne_precision;
  j["ne_recall"] = r.ne_recall;
  j["hori_coh_1"] = r.hori_coh_1 ? nlohmann::ordered_json(*r.hori_coh_1) : nlohmann::ordered_json();
  j["hori_coh_2"] = r.hori_coh_2 ? nlohmann::ordered_json(*r.hori_coh_2) : nlohmann::ordered_json();
  j["n_captions"] = r.n_captions;
  j["n_documents"] = r.n_documents;
  return j;
}

}  // namespace concaps
