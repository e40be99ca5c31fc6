#include "undf/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>

#include "undf/errors.h"

namespace undf {

namespace {

constexpr char kMagic[8] = {'U', 'N', 'D', 'F', 'C', 'K', 'P', 'T'};

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t GetLe(std::span<const std::uint8_t> bytes, std::size_t at, int n) {
  if (at + n > bytes.size()) throw ValidationError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | bytes[at + i];
  return v;
}

}  // namespace

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt) {
  ckpt.params.CheckShapes(ckpt.arch);
  Json tensors = Json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.params.tensors()) {
    tensors.push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.value.size()) * 8;
  }
  const Json header = {{"arch", ArchConfigToJson(ckpt.arch)},
                       {"stft", StftConfigToJson(ckpt.stft)},
                       {"tensors", tensors},
                       {"metadata", ckpt.metadata}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  PutLe(out, kCheckpointVersion, 4);
  PutLe(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& t : ckpt.params.tensors()) {
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        PutLe(out, std::bit_cast<std::uint64_t>(t.value(r, c)), 8);
      }
    }
  }
  return out;
}

Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw ValidationError("checkpoint: bad magic");
  }
  const auto version = GetLe(bytes, 8, 4);
  if (version != kCheckpointVersion) {
    throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_len = GetLe(bytes, 12, 8);
  if (20 + header_len > bytes.size()) throw ValidationError("checkpoint: truncated header");
  Json header;
  try {
    header = Json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::parse_error&) {
    throw ValidationError("checkpoint: header is not valid JSON");
  }
  Checkpoint ckpt;
  ckpt.arch = ArchConfigFromJson(Field<Json>(header, "arch"));
  ckpt.stft = StftConfigFromJson(Field<Json>(header, "stft"));
  ckpt.metadata = FieldOr<Json>(header, "metadata", Json::object());
  const std::size_t data_at = 20 + header_len;
  for (const auto& t : Field<Json>(header, "tensors")) {
    const auto shape = Field<std::vector<std::int64_t>>(t, "shape");
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw ValidationError("checkpoint: bad shape");
    const auto offset = Field<std::uint64_t>(t, "offset");
    Eigen::MatrixXd value(shape[0], shape[1]);
    std::size_t at = data_at + offset;
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c, at += 8) {
        value(r, c) = std::bit_cast<double>(GetLe(bytes, at, 8));
      }
    }
    ckpt.params.Add(Field<std::string>(t, "name"), std::move(value));
  }
  ckpt.params.CheckShapes(ckpt.arch);
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = EncodeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("checkpoint not found: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes);
}

void WriteLossCsv(const std::filesystem::path& path, const std::vector<double>& step_loss) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(17) << "step,loss\n";
  for (std::size_t i = 0; i < step_loss.size(); ++i) out << i + 1 << "," << step_loss[i] << "\n";
}

}  // namespace undf
