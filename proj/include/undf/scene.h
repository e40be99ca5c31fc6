#pragma once

// Anechoic direct-path simulation of a compact microphone array.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "undf/pattern.h"
#include "undf/stft.h"

namespace undf {

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kDefaultDistance = 1.5;
inline constexpr int kFractionalDelayTaps = 64;

using Point3 = std::array<double, 3>;

struct ArrayGeometry {
  std::vector<Point3> mic_positions;
  int reference_index = 0;

  int num_mics() const { return static_cast<int>(mic_positions.size()); }
  // Largest mic distance from the origin.
  double radius() const;
  void Validate() const;
};

// Center mic (index 0, the reference) plus three mics on a 3 cm diameter
// circle at 0, 120 and 240 degrees.
ArrayGeometry BuildDefaultArray();

struct PathResponse {
  double delay = 0.0;  // seconds
  double gain = 0.0;   // 1 / (4 pi d)
};

// Source at azimuth `doa` (zero elevation) and `distance` from the origin.
std::vector<PathResponse> DirectPath(const ArrayGeometry& geom, double doa, double distance);

// 64-tap windowed-sinc fractional delay plus gain. Output keeps input length.
std::vector<double> DelayAndScale(const std::vector<double>& signal, double delay_samples,
                                  double gain);

struct SourceSpec {
  double doa = 0.0;  // radians
  double distance = kDefaultDistance;
  std::vector<double> signal;
};

struct SceneSpec {
  std::vector<SourceSpec> sources;
  std::optional<double> noise_snr_db;  // absent or +inf: noiseless
  double duration = 4.0;
  int sample_rate = 16000;
  std::uint64_t rng_seed = 0;

  std::size_t num_samples() const;
  std::vector<double> doas() const;
};

struct RenderedScene {
  std::vector<std::vector<double>> mic_signals;     // Q x S
  std::vector<std::vector<double>> ref_components;  // N x S, noiseless, at the reference mic
  std::vector<double> doas;
  int reference_index = 0;
  int sample_rate = 16000;

  const std::vector<double>& reference() const { return mic_signals[reference_index]; }
  std::vector<double> ReferenceSourceSum() const;
};

RenderedScene RenderMics(const SceneSpec& scene, const ArrayGeometry& geom);

// Per-frame gains [T x N] for the sources' DOAs. `patterns` holds either one
// static pattern or exactly T patterns.
Eigen::MatrixXd TargetGains(const std::vector<GainPattern>& patterns,
                            const std::vector<double>& doas, int frames);

// Z[t,f] = sum_n gain_t(theta_n) X_{ref,n}[t,f], returned in the time domain.
std::vector<double> RenderTarget(const RenderedScene& scene,
                                 const std::vector<GainPattern>& patterns, const StftConfig& cfg);

enum class Split { kTrain, kVal, kTest };
Split ParseSplit(const std::string& name);

// Candidate DOA grid for a split, in radians.
std::vector<double> DoaGrid(Split split);

enum class SyntheticKind { kSpeechShapedNoise, kHarmonic, kWhiteNoise };

struct SyntheticSourceSpec {
  SyntheticKind kind = SyntheticKind::kSpeechShapedNoise;
  std::uint64_t seed = 0;
  double f0 = 0.0;  // harmonic only; 0 picks one from the seed
};

SyntheticKind ParseSyntheticKind(const std::string& name);
std::string SyntheticKindName(SyntheticKind kind);

// Unit-RMS synthetic material, byte-identical for equal arguments.
std::vector<double> GenerateSynthetic(const SyntheticSourceSpec& spec, std::size_t num_samples,
                                      int sample_rate);

struct SceneSamplingConfig {
  double duration = 4.0;
  int sample_rate = 16000;
  double distance = kDefaultDistance;
  int max_train_sources = 3;
  int test_sources = 2;
  std::optional<double> noise_snr_db;
};

// DOAs drawn without replacement from the split grid; synthetic sources.
SceneSpec SampleScene(Split split, std::mt19937_64& rng, const SceneSamplingConfig& cfg);

}  // namespace undf
