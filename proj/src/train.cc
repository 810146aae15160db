#include "concaps/train.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "concaps/checkpoint.h"
#include "concaps/errors.h"

namespace concaps {

using ojson = nlohmann::ordered_json;

int warmup_steps(const OptimizerConfig& config, int total_steps) {
  const long w = std::lround(config.warmup_fraction * total_steps);
  return static_cast<int>(std::clamp<long>(w, 1, total_steps));
}

double learning_rate(int step, const OptimizerConfig& config, int total_steps) {
  if (step < 1 || step > total_steps) fail(ErrorKind::kIndex, "step outside the schedule");
  const int warm = warmup_steps(config, total_steps);
  if (step <= warm) return config.peak_lr * static_cast<double>(step) / warm;
  return config.peak_lr * static_cast<double>(total_steps - step) / (total_steps - warm);
}

double clip_gradients(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : std::as_const(params).all()) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Parameter* p : params.all()) p->grad *= factor;
  }
  return norm;
}

AdamOptimizer::AdamOptimizer(ParameterSet& params, const OptimizerConfig& config)
    : params_(params), config_(config) {
  for (const Parameter* p : std::as_const(params).all()) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::step(double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, t_);
  const double c2 = 1.0 - std::pow(b2, t_);
  auto all = params_.all();
  for (size_t i = 0; i < all.size(); ++i) {
    Parameter& p = *all[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

CombinedLoss batch_loss(Tape& tape, const CaptionModel& model, const Batch& batch,
                        const InputSource& source, Rng* dropout_rng) {
  const CoherenceConfig& coh = model.spec().coherence;
  const Vocab& vocab = model.vocab();
  const bool need_fakes = coh.lambda_vert > 0.0 || coh.lambda_hori1 > 0.0;

  std::vector<Var> gen_terms;
  std::vector<CaptionStates> states;
  for (const BatchItem& item : batch.items) {
    const Var memory = model.memory(tape, source.make(item.txt, item.feature_key));
    const std::vector<int> ids = vocab.encode(item.true_cap);
    const DecoderOutput out = model.decode(tape, ids, memory, dropout_rng);
    gen_terms.push_back(generative_loss(out.logits, ids).total);
    CaptionStates s;
    s.true_state = end_state(out, ids);
    if (need_fakes && item.fake_cap) {
      const std::vector<int> fake_ids = vocab.encode(*item.fake_cap);
      const DecoderOutput fake = model.decode(tape, fake_ids, memory, dropout_rng);
      s.fake_state = end_state(fake, fake_ids);
    }
    states.push_back(s);
  }
  const PairSet pairs = enumerate_pairs(batch, coh.window);

  LossTerms terms;
  terms.gen = [&] {
    Var sum = tape.scalar(0.0);
    for (const Var& g : gen_terms) sum = ag::add(sum, g);
    return sum;
  };
  terms.vert = [&] {
    std::vector<Var> trues;
    std::vector<std::optional<Var>> fakes;
    for (const CaptionStates& s : states) {
      trues.push_back(s.true_state);
      fakes.push_back(s.fake_state);
    }
    return vertical_loss(tape, trues, fakes, model.vert_scorer());
  };
  terms.hori1 = [&] { return hori1_loss(tape, states, pairs, model.hori1_scorer()); };
  terms.hori2 = [&] { return hori2_loss(tape, states, pairs, model.hori2_scorer()); };
  return combine_losses(tape, coh, terms);
}

TrainingData load_training_data(const DataConfig& data) {
  TrainingData out;
  if (data.corpus.empty()) fail(ErrorKind::kConfig, "data.corpus is required");
  if (data.features.empty()) fail(ErrorKind::kConfig, "data.features is required");
  {
    std::ifstream in(data.corpus, std::ios::binary);
    if (!in) fail(ErrorKind::kNotFound, "cannot open corpus " + data.corpus);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    out.corpus_hash = fnv1a64(bytes.data(), bytes.size());
  }
  out.corpus = load_corpus(data.corpus);
  if (!data.entities.empty()) {
    out.tagger = DictionaryTagger::load(data.entities);
    tag_corpus(out.corpus, out.tagger);
  }
  out.pool = EntityPool::build(out.corpus);
  out.store = std::make_unique<FeatureStore>(FeatureStore::open(data.features));
  std::vector<Tokens> sentences;
  for (const Document& doc : out.corpus) {
    if (doc.split != Split::kTrain) continue;
    sentences.push_back(doc.body);
    for (const ImageRecord& img : doc.images) sentences.push_back(img.caption);
  }
  out.vocab = Vocab::build(sentences);
  return out;
}

std::string hash_hex(uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

uint64_t config_hash(const TrainConfig& config) {
  const std::string text = train_config_to_json(config).dump();
  return fnv1a64(text.data(), text.size());
}

namespace {

void write_json(const std::filesystem::path& path, const ojson& j) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

ojson step_json(const StepRecord& r) {
  return ojson{{"step", r.step},   {"lr", r.lr},         {"gen", r.gen},
               {"vert", r.vert},   {"hori1", r.hori1},   {"hori2", r.hori2},
               {"total", r.total}, {"grad_norm", r.grad_norm}};
}

void dump_nan_batch(const std::filesystem::path& path, const StepRecord& r, const Batch& batch,
                    const Corpus& corpus) {
  ojson j;
  j["step"] = r.step;
  j["components"] = step_json(r);
  j["items"] = ojson::array();
  for (const BatchItem& item : batch.items) {
    const Document& doc = corpus[item.doc_index];
    j["items"].push_back({{"doc_id", doc.doc_id},
                          {"image_id", doc.images[item.img_index - 1].image_id},
                          {"feature_key", item.feature_key},
                          {"true_cap", join_tokens(item.true_cap)},
                          {"fake_cap", item.fake_cap ? ojson(join_tokens(*item.fake_cap)) : ojson()}});
  }
  write_json(path, j);
}

}  // namespace

TrainResult train_model(const TrainConfig& config, const std::filesystem::path& out_dir,
                        std::ostream* log) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  TrainingData data = load_training_data(config.data);
  std::filesystem::create_directories(out_dir);

  CaptionModel model(config.spec, data.vocab, config.seed);
  InputSource source(model.spec(), model.vocab(), *data.store);
  AdamOptimizer adam(model.params(), config.optimizer);
  Rng sampler_rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);
  Rng dropout_rng(config.seed * 0x9E3779B97F4A7C15ULL + 2);
  Rng* dropout = config.spec.model.dropout > 0.0 ? &dropout_rng : nullptr;

  SamplerOptions sampler;
  sampler.batch_size = config.batch_size;
  sampler.window = config.spec.coherence.window;
  sampler.window_tokens = config.data.window_tokens;

  TrainResult result;
  result.checkpoint = out_dir / "model.ckpt";
  result.manifest = out_dir / "manifest.json";
  std::vector<Batch> epoch;
  size_t cursor = 0;
  int epochs = 0;
  for (int step = 1; step <= config.total_steps; ++step) {
    if (cursor == epoch.size()) {
      epoch = build_epoch_batches(data.corpus, data.pool, sampler, sampler_rng);
      if (epoch.empty()) fail(ErrorKind::kValidation, "the training split yields no batches");
      cursor = 0;
      ++epochs;
    }
    const Batch& batch = epoch[cursor++];

    model.params().zero_grad();
    Tape tape(true);
    const CombinedLoss loss = batch_loss(tape, model, batch, source, dropout);
    StepRecord rec;
    rec.step = step;
    rec.lr = learning_rate(step, config.optimizer, config.total_steps);
    rec.gen = loss.gen;
    rec.vert = loss.vert;
    rec.hori1 = loss.hori1;
    rec.hori2 = loss.hori2;
    rec.total = loss.total.scalar();
    if (!std::isfinite(rec.total)) {
      dump_nan_batch(out_dir / "nan_dump.json", rec, batch, data.corpus);
      fail(ErrorKind::kNumeric, "non-finite loss at step " + std::to_string(step) +
                                    "; batch written to " + (out_dir / "nan_dump.json").string());
    }
    tape.backward(loss.total);
    rec.grad_norm = clip_gradients(model.params(), config.optimizer.clip_norm);
    adam.step(rec.lr);
    result.steps.push_back(rec);

    if (log && (step == 1 || step % 50 == 0 || step == config.total_steps))
      *log << "step " << step << " loss " << rec.total << " gen " << rec.gen << '\n';
    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 &&
        step != config.total_steps)
      save_checkpoint(model, out_dir / ("step_" + std::to_string(step) + ".ckpt"),
                      ojson{{"step", step}, {"window_tokens", config.data.window_tokens}});
  }
  save_checkpoint(model, result.checkpoint,
                  ojson{{"step", config.total_steps}, {"window_tokens", config.data.window_tokens}});

  ojson manifest;
  manifest["config_hash"] = hash_hex(config_hash(config));
  manifest["corpus_hash"] = hash_hex(data.corpus_hash);
  manifest["seed"] = config.seed;
  manifest["epochs"] = epochs;
  manifest["config"] = train_config_to_json(config);
  manifest["steps"] = ojson::array();
  for (const StepRecord& r : result.steps) manifest["steps"].push_back(step_json(r));
  write_json(result.manifest, manifest);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(out_dir / "timing.json", ojson{{"wall_clock_seconds", seconds}});
  return result;
}

}  // namespace concaps
