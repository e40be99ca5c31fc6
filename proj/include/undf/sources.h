#pragma once

// Source material registry: mono 16 kHz signals from WAV files or synthetic
// specs, enumerated in a fixed order.

#include <filesystem>
#include <string>
#include <vector>

namespace undf {

inline constexpr int kRegistryRate = 16000;

struct SourceEntry {
  std::string name;  // file name relative to the ingested directory
  std::vector<double> signal;
  int original_rate = kRegistryRate;
  bool resampled = false;
  bool synthetic = false;
};

// Reads every *.wav and *.json (synthetic spec with "duration_s") in `dir`,
// sorted by file name. Throws IngestionError listing every offending file,
// or when the directory is missing, unreadable or holds no sources.
std::vector<SourceEntry> IngestSources(const std::filesystem::path& dir);

}  // namespace undf
