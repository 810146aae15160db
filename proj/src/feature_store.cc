#include "concaps/feature_store.h"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "concaps/errors.h"

namespace concaps {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'F', '1'};
constexpr uint8_t kFloat32 = 1;
constexpr const char* kManifestName = "manifest.json";

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}

  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > bytes_.size()) fail(ErrorKind::kFormat, "feature file truncated");
  }

  const std::vector<uint8_t>& bytes_;
  size_t pos_ = 0;
};

void encode_array(std::vector<uint8_t>& out, const Matrix& m) {
  out.push_back(kFloat32);
  out.push_back(2);
  put_u32(out, static_cast<uint32_t>(m.rows()));
  put_u32(out, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(out, static_cast<float>(m(r, c)));
}

Matrix decode_array(Reader& in) {
  const uint8_t dtype = in.u8();
  if (dtype != kFloat32) fail(ErrorKind::kFormat, "unsupported dtype code " + std::to_string(dtype));
  const uint8_t rank = in.u8();
  if (rank != 2) fail(ErrorKind::kFormat, "expected rank-2 arrays, got rank " + std::to_string(rank));
  const uint32_t rows = in.u32();
  const uint32_t cols = in.u32();
  Matrix m(rows, cols);
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < cols; ++c) m(r, c) = static_cast<double>(in.f32());
  return m;
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kNotFound, "cannot open " + path.string());
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string file_name_for(const std::string& key) {
  std::string name;
  for (char c : key) name += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return name + "-" + std::to_string(fnv1a64(key.data(), key.size()) & 0xffff) + ".ccf";
}

void check_stream(const char* what, const Matrix& m, int max_rows, int exact_rows, int width) {
  if (exact_rows >= 0 && m.rows() != exact_rows)
    fail(ErrorKind::kFormat, std::string(what) + ": expected " + std::to_string(exact_rows) +
                                 " rows, got " + std::to_string(m.rows()));
  if (max_rows >= 0 && m.rows() > max_rows)
    fail(ErrorKind::kFormat, std::string(what) + ": at most " + std::to_string(max_rows) +
                                 " rows allowed, got " + std::to_string(m.rows()));
  if (m.rows() > 0 && m.cols() != width)
    fail(ErrorKind::kFormat, std::string(what) + ": expected width " + std::to_string(width) +
                                 ", got " + std::to_string(m.cols()));
  if (!m.allFinite()) fail(ErrorKind::kFormat, std::string(what) + ": non-finite entries");
}

}  // namespace

FeatureLayout reference_layout() {
  FeatureLayout l;
  l.text_width = 2048;
  l.image_rows = 49;
  l.image_width = 2048;
  l.max_faces = 4;
  l.face_width = 512;
  l.object_width = 2048;
  return l;
}

void validate_bundle(const FeatureBundle& b, const FeatureLayout& l) {
  check_stream("text", b.text, -1, l.text_rows, l.text_width);
  check_stream("image", b.image, -1, l.image_rows, l.image_width);
  check_stream("faces", b.faces, l.max_faces, -1, l.face_width);
  check_stream("objects", b.objects, l.max_objects, -1, l.object_width);
}

uint64_t fnv1a64(const void* data, size_t size) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_hex(const std::vector<uint8_t>& bytes) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes.data(), bytes.size());
  return os.str();
}

std::vector<uint8_t> encode_feature_file(const FeatureBundle& bundle) {
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  encode_array(out, bundle.text);
  encode_array(out, bundle.image);
  encode_array(out, bundle.faces);
  encode_array(out, bundle.objects);
  return out;
}

FeatureBundle decode_feature_file(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorKind::kFormat, "bad feature file magic");
  std::vector<uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader in(body);
  FeatureBundle b;
  b.text = decode_array(in);
  b.image = decode_array(in);
  b.faces = decode_array(in);
  b.objects = decode_array(in);
  if (!in.done()) fail(ErrorKind::kFormat, "trailing bytes in feature file");
  return b;
}

FeatureStore FeatureStore::open(const std::filesystem::path& dir) {
  FeatureStore store;
  store.dir_ = dir;
  std::ifstream in(dir / kManifestName);
  if (!in) fail(ErrorKind::kNotFound, "no feature manifest in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("feature manifest: ") + e.what());
  }
  if (j.value("format", "") != "CCF1" || !j.contains("entries") || !j["entries"].is_object())
    fail(ErrorKind::kFormat, "feature manifest is not a CCF1 manifest");
  for (const auto& [key, e] : j["entries"].items())
    store.entries_[key] = Entry{e.at("file").get<std::string>(), e.at("checksum").get<std::string>()};
  return store;
}

FeatureStore FeatureStore::create(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  FeatureStore store;
  store.dir_ = dir;
  return store;
}

void FeatureStore::put(const std::string& key, const FeatureBundle& bundle) {
  const std::vector<uint8_t> bytes = encode_feature_file(bundle);
  const std::string name = file_name_for(key);
  std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + (dir_ / name).string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  entries_[key] = Entry{name, checksum_hex(bytes)};
}

void FeatureStore::save_manifest() const {
  nlohmann::ordered_json j;
  j["format"] = "CCF1";
  j["entries"] = nlohmann::ordered_json::object();
  for (const auto& [key, e] : entries_) j["entries"][key] = {{"file", e.file}, {"checksum", e.checksum}};
  const auto tmp = dir_ / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write feature manifest");
    out << j.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, dir_ / kManifestName);
}

FeatureBundle FeatureStore::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) fail(ErrorKind::kNotFound, "feature key '" + key + "' not in store");
  return decode_feature_file(read_file(dir_ / it->second.file));
}

bool FeatureStore::verify(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) fail(ErrorKind::kNotFound, "feature key '" + key + "' not in store");
  return checksum_hex(read_file(dir_ / it->second.file)) == it->second.checksum;
}

FeatureBundle load_cached_features(const std::string& key, const FeatureStore& store,
                                   const FeatureLayout& layout) {
  FeatureBundle b = store.get(key);
  validate_bundle(b, layout);
  return b;
}

}  // namespace concaps
