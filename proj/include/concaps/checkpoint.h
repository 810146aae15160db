#ifndef CONCAPS_CHECKPOINT_H_
#define CONCAPS_CHECKPOINT_H_

// Checkpoint container, version 1, all integers little-endian:
//   "CCKP"                 4 bytes
//   version                u32
//   header length          u64
//   header                 UTF-8 JSON: {"format", "version", "spec", "vocab",
//                          "parameters": [{"name", "rows", "cols"}], "extra"}
//   payload                every parameter in header order, float64 row-major
// Files are written to a temporary sibling and renamed into place, so a
// reader never sees a partially written checkpoint.

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "concaps/model.h"

namespace concaps {

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const CaptionModel& model, const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

struct LoadedCheckpoint {
  std::unique_ptr<CaptionModel> model;
  nlohmann::json extra;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace concaps

#endif  // CONCAPS_CHECKPOINT_H_
