#ifndef CONCAPS_TRAIN_H_
#define CONCAPS_TRAIN_H_

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "concaps/coherence.h"
#include "concaps/config.h"
#include "concaps/corpus.h"
#include "concaps/feature_store.h"
#include "concaps/model.h"
#include "concaps/sampler.h"

namespace concaps {

// Linear warmup to peak_lr over the first warmup_fraction of the steps, then
// linear decay to zero at total_steps. step is 1-based.
int warmup_steps(const OptimizerConfig& config, int total_steps);
double learning_rate(int step, const OptimizerConfig& config, int total_steps);

// Scales all gradients so their global norm is at most max_norm. Returns the
// norm before clipping. max_norm <= 0 leaves gradients alone.
double clip_gradients(ParameterSet& params, double max_norm);

class AdamOptimizer {
 public:
  AdamOptimizer(ParameterSet& params, const OptimizerConfig& config);
  void step(double lr);
  int steps_taken() const { return t_; }

 private:
  ParameterSet& params_;
  OptimizerConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int t_ = 0;
};

// The weighted training objective for one batch. Fake captions are decoded
// only when a weighted component needs them.
CombinedLoss batch_loss(Tape& tape, const CaptionModel& model, const Batch& batch,
                        const InputSource& source, Rng* dropout_rng = nullptr);

struct StepRecord {
  int step = 0;
  double lr = 0.0;
  double gen = 0.0;
  double vert = 0.0;
  double hori1 = 0.0;
  double hori2 = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
};

// Everything a run reads from disk.
struct TrainingData {
  Corpus corpus;
  std::unique_ptr<FeatureStore> store;
  DictionaryTagger tagger;
  EntityPool pool;
  Vocab vocab;
  uint64_t corpus_hash = 0;
};

// Loads and tags the corpus, opens the feature store, and builds the vocabulary
// from training-split captions and bodies.
TrainingData load_training_data(const DataConfig& data);

struct TrainResult {
  std::vector<StepRecord> steps;
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
};

// Writes model.ckpt, manifest.json (deterministic) and timing.json into
// out_dir. Aborts with kNumeric and a nan_dump.json on a non-finite loss.
TrainResult train_model(const TrainConfig& config, const std::filesystem::path& out_dir,
                        std::ostream* log = nullptr);

uint64_t config_hash(const TrainConfig& config);
std::string hash_hex(uint64_t h);

}  // namespace concaps

#endif  // CONCAPS_TRAIN_H_
