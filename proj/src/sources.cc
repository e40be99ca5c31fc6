#include "undf/sources.h"

#include <algorithm>
#include <cmath>

#include "undf/errors.h"
#include "undf/io.h"
#include "undf/scene.h"
#include "undf/wav.h"

namespace undf {

namespace fs = std::filesystem;

namespace {

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

SourceEntry LoadWavSource(const fs::path& path) {
  const WavData wav = ReadWav(path);
  if (wav.num_channels() != 1) {
    throw IngestionError("has " + std::to_string(wav.num_channels()) + " channels, expected mono");
  }
  if (wav.num_samples() == 0) throw IngestionError("contains no samples");
  SourceEntry e;
  e.original_rate = wav.sample_rate;
  if (wav.sample_rate == kRegistryRate) {
    e.signal = wav.channels.front();
  } else {
    e.signal = Resample(wav.channels.front(), wav.sample_rate, kRegistryRate);
    e.resampled = true;
  }
  return e;
}

SourceEntry LoadSyntheticSource(const fs::path& path) {
  const Json j = ReadJsonFile(path);
  const double duration = Field<double>(j, "duration_s");
  if (!(duration > 0.0)) throw ValidationError("duration_s must be positive");
  SourceEntry e;
  e.synthetic = true;
  e.signal = GenerateSynthetic(SyntheticFromJson(j),
                               static_cast<std::size_t>(std::llround(duration * kRegistryRate)),
                               kRegistryRate);
  return e;
}

}  // namespace

std::vector<SourceEntry> IngestSources(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IngestionError("not a readable directory: " + dir.string());
  std::vector<fs::path> files;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const std::string ext = Lower(it->path().extension().string());
    if (ext == ".wav" || ext == ".json") files.push_back(it->path());
  }
  if (ec) throw IngestionError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<SourceEntry> out;
  std::vector<std::string> offenders;
  for (const auto& path : files) {
    try {
      SourceEntry e = Lower(path.extension().string()) == ".wav" ? LoadWavSource(path)
                                                                  : LoadSyntheticSource(path);
      e.name = path.filename().string();
      out.push_back(std::move(e));
    } catch (const std::exception& err) {
      offenders.push_back(path.filename().string() + " (" + err.what() + ")");
    }
  }
  if (!offenders.empty()) {
    std::string msg = "ingestion failed for " + std::to_string(offenders.size()) + " file(s): ";
    for (std::size_t i = 0; i < offenders.size(); ++i) msg += (i ? "; " : "") + offenders[i];
    throw IngestionError(msg);
  }
  if (out.empty()) throw IngestionError("no WAV or synthetic sources in " + dir.string());
  return out;
}

}  // namespace undf
