#ifndef CONCAPS_FEATURE_STORE_H_
#define CONCAPS_FEATURE_STORE_H_

// On-disk cache of precomputed encoder outputs.
//
// Each feature_key maps to one file:
//   "CCF1"                                  4 bytes
//   4 arrays, in order text/image/faces/objects:
//     dtype   u8   (1 = little-endian float32)
//     rank    u8
//     shape   u32 little-endian per dimension
//     payload row-major
// A JSON manifest (manifest.json) in the same directory maps every key to its
// file name and an FNV-1a 64-bit checksum of the file bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "concaps/autograd.h"

namespace concaps {

// X^T, X^I, X^F, X^O for one image-text pair. An absent stream is a 0-row
// matrix.
struct FeatureBundle {
  Matrix text;
  Matrix image;
  Matrix faces;
  Matrix objects;
};

// Shape contract checked on load. A negative row count means "any".
struct FeatureLayout {
  int text_rows = -1;
  int text_width = 0;
  int image_rows = -1;
  int image_width = 0;
  int max_faces = -1;
  int face_width = 0;
  int max_objects = -1;
  int object_width = 0;
};

// The widths of the pretrained encoders: 2048-d text, 7x7 ResNet grid of
// 2048-d blocks, up to four 512-d faces, 2048-d objects.
FeatureLayout reference_layout();

void validate_bundle(const FeatureBundle& bundle, const FeatureLayout& layout);

std::vector<uint8_t> encode_feature_file(const FeatureBundle& bundle);
FeatureBundle decode_feature_file(const std::vector<uint8_t>& bytes);

uint64_t fnv1a64(const void* data, size_t size);
std::string checksum_hex(const std::vector<uint8_t>& bytes);

class FeatureStore {
 public:
  struct Entry {
    std::string file;
    std::string checksum;
  };

  // Opens an existing store (reads manifest.json).
  static FeatureStore open(const std::filesystem::path& dir);
  // Creates the directory if needed; starts with an empty manifest.
  static FeatureStore create(const std::filesystem::path& dir);

  void put(const std::string& key, const FeatureBundle& bundle);
  void save_manifest() const;

  bool contains(const std::string& key) const { return entries_.count(key) > 0; }
  // Throws kNotFound for unknown keys and kFormat for malformed files.
  FeatureBundle get(const std::string& key) const;
  // True when the file bytes hash to the manifest checksum.
  bool verify(const std::string& key) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, Entry> entries_;
};

// Reads a bundle and checks it against `layout` (reference dims by default).
FeatureBundle load_cached_features(const std::string& key, const FeatureStore& store,
                                   const FeatureLayout& layout = reference_layout());

}  // namespace concaps

#endif  // CONCAPS_FEATURE_STORE_H_
