#ifndef CONCAPS_GENERATE_H_
#define CONCAPS_GENERATE_H_

// Document-level caption generation and the evaluation report.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "concaps/corpus.h"
#include "concaps/decode.h"
#include "concaps/metrics.h"
#include "concaps/model.h"

namespace concaps {

enum class HoriHead { kHori1, kHori2 };

struct GenerateOptions {
  int window = 3;  // W; images are decoded in consecutive chunks of W
  BeamOptions beam;
  int caption_beam = 3;
  ScoreWeights weights;
  HoriHead head = HoriHead::kHori1;
  // nullopt: on when the checkpoint trained that head (lambda > 0).
  std::optional<bool> use_vert;
  std::optional<bool> use_hori;
  int window_tokens = 512;
  std::vector<Split> splits = {Split::kTest};
};

struct DecodedCaption {
  std::string doc_id;
  std::string image_id;
  Tokens caption;
  double gen_score = 0.0;
  double vert_score = 0.0;
  double seq_score = 0.0;
};

VertScoreFn vert_score_fn(const CaptionModel& model);
HoriScoreFn hori_score_fn(const CaptionModel& model, HoriHead head);

// Word-level beam search plus vertical rescoring for one image.
std::vector<CaptionHypothesis> image_candidates(const CaptionModel& model, const ModelInput& input,
                                                const BeamOptions& beam, const VertScoreFn& vert,
                                                const ScoreWeights& weights);

std::vector<DecodedCaption> decode_document(const CaptionModel& model, const Document& doc,
                                            const InputSource& source,
                                            const GenerateOptions& options);

std::vector<DecodedCaption> generate_captions(const CaptionModel& model, const Corpus& corpus,
                                              const InputSource& source,
                                              const GenerateOptions& options);

void write_decoded(const std::vector<DecodedCaption>& decoded, std::ostream& out);
void write_decoded(const std::vector<DecodedCaption>& decoded, const std::filesystem::path& path);
std::vector<DecodedCaption> read_decoded(std::istream& in);
std::vector<DecodedCaption> read_decoded(const std::filesystem::path& path);

struct MetricReport {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  double ne_precision = 0.0;
  double ne_recall = 0.0;
  std::optional<double> hori_coh_1;
  std::optional<double> hori_coh_2;
  size_t n_captions = 0;
  size_t n_documents = 0;
};

// Pairs every decoded caption with its corpus reference by (doc_id, image_id).
MetricReport evaluate_decoded(const std::vector<DecodedCaption>& decoded, const Corpus& corpus,
                              const EntityTagger& tagger);

nlohmann::ordered_json report_to_json(const MetricReport& report);

}  // namespace concaps

#endif  // CONCAPS_GENERATE_H_
