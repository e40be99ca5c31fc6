#pragma once

// RIFF/WAVE reading and writing plus a band-limited resampler.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace undf {

struct WavData {
  int sample_rate = 16000;
  std::vector<std::vector<double>> channels;  // channel-major, equal lengths

  int num_channels() const { return static_cast<int>(channels.size()); }
  std::size_t num_samples() const { return channels.empty() ? 0 : channels.front().size(); }
};

enum class WavFormat { kPcm16, kFloat32 };

// Accepts PCM 16/24/32-bit and IEEE float 32/64-bit, plain or extensible
// headers. Throws IngestionError on malformed input.
WavData ParseWav(std::span<const std::uint8_t> bytes);
WavData ReadWav(const std::filesystem::path& path);

// PCM16 output is clipped to [-1, 1).
std::vector<std::uint8_t> EncodeWav(const WavData& wav, WavFormat format = WavFormat::kFloat32);
void WriteWav(const std::filesystem::path& path, const WavData& wav,
              WavFormat format = WavFormat::kFloat32);

// Kaiser-windowed sinc interpolation; the cutoff follows the lower of the
// two Nyquist frequencies.
std::vector<double> Resample(std::span<const double> input, int from_rate, int to_rate);

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> Base64Decode(const std::string& text);

}  // namespace undf
