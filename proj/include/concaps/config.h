#ifndef CONCAPS_CONFIG_H_
#define CONCAPS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "concaps/model.h"

namespace concaps {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double peak_lr = 1e-4;
  double warmup_fraction = 0.05;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
};

struct DataConfig {
  std::string corpus;    // JSONL
  std::string features;  // feature store directory
  std::string entities;  // TSV entity dictionary
  int window_tokens = 512;
};

struct TrainConfig {
  ModelSpec spec;
  OptimizerConfig optimizer;
  DataConfig data;
  int total_steps = 1000;
  int batch_size = 15;
  uint64_t seed = 1;
  int checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const;
};

nlohmann::ordered_json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json train_config_to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
// Relative data paths are resolved against the config file's directory.
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace concaps

#endif  // CONCAPS_CONFIG_H_
