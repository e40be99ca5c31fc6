#pragma once

// Model checkpoints: "UNDFCKPT", u32 version, u64 header length, a JSON
// header (arch, stft, tensor table, metadata), then every tensor as
// little-endian float64 in row-major order.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "undf/io.h"
#include "undf/neural_filter.h"
#include "undf/stft.h"

namespace undf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ArchConfig arch;
  StftConfig stft;
  ModelParams params;
  Json metadata = Json::object();
};

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt);
Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// step,loss rows followed by nothing else.
void WriteLossCsv(const std::filesystem::path& path, const std::vector<double>& step_loss);

}  // namespace undf
