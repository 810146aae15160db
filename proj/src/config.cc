#include "concaps/config.h"

#include <fstream>
#include <functional>
#include <map>

#include "concaps/errors.h"

namespace concaps {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

using Setters = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& obj, const std::string& section, const Setters& setters) {
  if (!obj.is_object()) fail(ErrorKind::kConfig, "'" + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorKind::kConfig, "unknown key '" + section + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      fail(ErrorKind::kConfig, "bad value for '" + section + "." + key + "': " + e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::string mode_name(EncoderMode m) { return m == EncoderMode::kToy ? "toy" : "cached"; }

EncoderMode parse_mode(const std::string& s) {
  if (s == "toy") return EncoderMode::kToy;
  if (s == "cached") return EncoderMode::kCached;
  fail(ErrorKind::kConfig, "encoder mode must be 'toy' or 'cached'");
}

}  // namespace

ojson spec_to_json(const ModelSpec& spec) {
  const ModelConfig& m = spec.model;
  const EncoderConfig& e = spec.encoder;
  const CoherenceConfig& c = spec.coherence;
  ojson j;
  j["model"] = {{"layers", m.layers},   {"heads", m.heads},       {"d_model", m.d_model},
                {"d_ff", m.d_ff},       {"vocab_size", m.vocab_size}, {"max_len", m.max_len},
                {"dropout", m.dropout}};
  j["encoder"] = {{"mode", mode_name(e.mode)},
                  {"d_text", e.d_text},
                  {"d_image", e.d_image},
                  {"d_face", e.d_face},
                  {"d_object", e.d_object},
                  {"n_text_layers", e.n_text_layers},
                  {"text_heads", e.text_heads},
                  {"text_ff", e.text_ff},
                  {"max_text_len", e.max_text_len},
                  {"image_patches", e.image_patches},
                  {"raw_image", e.raw_image},
                  {"max_faces", e.max_faces},
                  {"raw_face", e.raw_face},
                  {"raw_object", e.raw_object}};
  j["coherence"] = {{"lambda_gen", c.lambda_gen},     {"lambda_vert", c.lambda_vert},
                    {"lambda_hori1", c.lambda_hori1}, {"lambda_hori2", c.lambda_hori2},
                    {"window", c.window},             {"scorer_hidden", c.scorer_hidden}};
  return j;
}

namespace {

void read_spec_sections(const json& j, ModelSpec& spec, std::map<std::string, bool>& seen) {
  ModelConfig& m = spec.model;
  EncoderConfig& e = spec.encoder;
  CoherenceConfig& c = spec.coherence;
  if (j.contains("model")) {
    seen["model"] = true;
    apply(j["model"], "model",
          {{"layers", set(m.layers)},
           {"heads", set(m.heads)},
           {"d_model", set(m.d_model)},
           {"d_ff", set(m.d_ff)},
           {"vocab_size", set(m.vocab_size)},
           {"max_len", set(m.max_len)},
           {"dropout", set(m.dropout)}});
  }
  if (j.contains("encoder")) {
    seen["encoder"] = true;
    apply(j["encoder"], "encoder",
          {{"mode", [&e](const json& v) { e.mode = parse_mode(v.get<std::string>()); }},
           {"d_text", set(e.d_text)},
           {"d_image", set(e.d_image)},
           {"d_face", set(e.d_face)},
           {"d_object", set(e.d_object)},
           {"n_text_layers", set(e.n_text_layers)},
           {"text_heads", set(e.text_heads)},
           {"text_ff", set(e.text_ff)},
           {"max_text_len", set(e.max_text_len)},
           {"image_patches", set(e.image_patches)},
           {"raw_image", set(e.raw_image)},
           {"max_faces", set(e.max_faces)},
           {"raw_face", set(e.raw_face)},
           {"raw_object", set(e.raw_object)}});
  }
  if (j.contains("coherence")) {
    seen["coherence"] = true;
    apply(j["coherence"], "coherence",
          {{"lambda_gen", set(c.lambda_gen)},
           {"lambda_vert", set(c.lambda_vert)},
           {"lambda_hori1", set(c.lambda_hori1)},
           {"lambda_hori2", set(c.lambda_hori2)},
           {"window", set(c.window)},
           {"scorer_hidden", set(c.scorer_hidden)}});
  }
}

}  // namespace

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  std::map<std::string, bool> seen;
  read_spec_sections(j, spec, seen);
  return spec;
}

void TrainConfig::validate() const {
  spec.encoder.validate();
  spec.coherence.validate();
  const OptimizerConfig& o = optimizer;
  if (!(o.warmup_fraction > 0.0 && o.warmup_fraction < 1.0))
    fail(ErrorKind::kConfig, "warmup_fraction must be in (0, 1)");
  if (!(o.peak_lr > 0.0)) fail(ErrorKind::kConfig, "peak learning rate must be positive");
  if (!(o.eps > 0.0)) fail(ErrorKind::kConfig, "Adam epsilon must be positive");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0 && o.beta2 >= 0.0 && o.beta2 < 1.0))
    fail(ErrorKind::kConfig, "Adam betas must be in [0, 1)");
  if (total_steps < 1) fail(ErrorKind::kConfig, "total_steps must be positive");
  if (batch_size < 1) fail(ErrorKind::kConfig, "batch_size must be positive");
  if (checkpoint_every < 0) fail(ErrorKind::kConfig, "checkpoint_every must be >= 0");
  if (data.window_tokens < 2) fail(ErrorKind::kConfig, "window_tokens must be >= 2");
  if (spec.encoder.mode == EncoderMode::kToy && spec.encoder.max_text_len < data.window_tokens)
    fail(ErrorKind::kConfig, "encoder.max_text_len must cover data.window_tokens");
}

ojson train_config_to_json(const TrainConfig& c) {
  ojson j = spec_to_json(c.spec);
  const OptimizerConfig& o = c.optimizer;
  j["optimizer"] = {{"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"eps", o.eps},
                    {"peak_lr", o.peak_lr},
                    {"warmup_fraction", o.warmup_fraction},
                    {"clip_norm", o.clip_norm}};
  j["data"] = {{"corpus", c.data.corpus},
               {"features", c.data.features},
               {"entities", c.data.entities},
               {"window_tokens", c.data.window_tokens}};
  j["total_steps"] = c.total_steps;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "config must be a JSON object");
  TrainConfig c;
  std::map<std::string, bool> seen;
  read_spec_sections(j, c.spec, seen);
  OptimizerConfig& o = c.optimizer;
  Setters top = {
      {"model", [](const json&) {}},
      {"encoder", [](const json&) {}},
      {"coherence", [](const json&) {}},
      {"optimizer",
       [&o](const json& v) {
         apply(v, "optimizer",
               {{"beta1", set(o.beta1)},
                {"beta2", set(o.beta2)},
                {"eps", set(o.eps)},
                {"peak_lr", set(o.peak_lr)},
                {"warmup_fraction", set(o.warmup_fraction)},
                {"clip_norm", set(o.clip_norm)}});
       }},
      {"data",
       [&c](const json& v) {
         apply(v, "data",
               {{"corpus", set(c.data.corpus)},
                {"features", set(c.data.features)},
                {"entities", set(c.data.entities)},
                {"window_tokens", set(c.data.window_tokens)}});
       }},
      {"total_steps", set(c.total_steps)},
      {"batch_size", set(c.batch_size)},
      {"seed", set(c.seed)},
      {"checkpoint_every", set(c.checkpoint_every)},
  };
  apply(j, "config", top);
  if (c.spec.encoder.mode == EncoderMode::kToy &&
      !(j.contains("encoder") && j["encoder"].contains("max_text_len")))
    c.spec.encoder.max_text_len = c.data.window_tokens;
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kNotFound, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, "config " + path.string() + ": " + e.what());
  }
  TrainConfig c = train_config_from_json(j);
  const auto base = path.parent_path();
  auto resolve = [&base](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.data.corpus);
  resolve(c.data.features);
  resolve(c.data.entities);
  return c;
}

}  // namespace concaps
