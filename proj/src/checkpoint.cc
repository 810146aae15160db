#include "concaps/checkpoint.h"

#include <cstring>
#include <fstream>

#include "concaps/config.h"
#include "concaps/errors.h"

namespace concaps {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'K', 'P'};

template <typename T>
void put_le(std::string& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) fail(ErrorKind::kFormat, "checkpoint truncated");
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const CaptionModel& model, const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra) {
  nlohmann::ordered_json header;
  header["format"] = "concaps-checkpoint";
  header["version"] = kCheckpointVersion;
  header["spec"] = spec_to_json(model.spec());
  header["vocab"] = model.vocab().tokens();
  header["parameters"] = nlohmann::ordered_json::array();
  for (const Parameter* p : model.params().all())
    header["parameters"].push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  header["extra"] = extra;
  const std::string text = header.dump();

  std::string bytes(kMagic, 4);
  put_le<uint32_t>(bytes, kCheckpointVersion);
  put_le<uint64_t>(bytes, text.size());
  bytes += text;
  for (const Parameter* p : model.params().all()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      uint64_t bits;
      const double v = p->value.data()[i];
      std::memcpy(&bits, &v, sizeof bits);
      put_le<uint64_t>(bytes, bits);
    }
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorKind::kIo, "short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kNotFound, "cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorKind::kFormat, path.string() + " is not a checkpoint");
  size_t pos = 4;
  const uint32_t version = get_le<uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    fail(ErrorKind::kFormat, "unsupported checkpoint version " + std::to_string(version));
  const uint64_t header_len = get_le<uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) fail(ErrorKind::kFormat, "checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  ModelSpec spec = spec_from_json(header.at("spec"));
  Vocab vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  LoadedCheckpoint out;
  out.model = std::make_unique<CaptionModel>(spec, std::move(vocab), 0);
  ParameterSet& params = out.model->params();

  const auto& listed = header.at("parameters");
  if (listed.size() != params.size())
    fail(ErrorKind::kFormat, "checkpoint parameter count does not match its config");
  for (const auto& entry : listed) {
    Parameter& p = params.at(entry.at("name").get<std::string>());
    if (entry.at("rows").get<Eigen::Index>() != p.value.rows() ||
        entry.at("cols").get<Eigen::Index>() != p.value.cols())
      fail(ErrorKind::kFormat, "shape mismatch for parameter " + p.name);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const uint64_t bits = get_le<uint64_t>(bytes, pos);
      double v;
      std::memcpy(&v, &bits, sizeof v);
      p.value.data()[i] = v;
    }
  }
  if (pos != bytes.size()) fail(ErrorKind::kFormat, "trailing bytes in checkpoint");
  out.extra = header.value("extra", nlohmann::json::object());
  return out;
}

}  // namespace concaps
