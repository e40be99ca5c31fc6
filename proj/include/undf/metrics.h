#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "undf/stft.h"

namespace undf {

inline constexpr double kSdrCapDb = 100.0;

// sum |M X|^2 / sum |X|^2 over all bins and frames.
double WidebandRatio(const ComplexGrid& mask, const Spectrogram& source);

// Per-bin ratio over frames; bins without source energy are absent.
std::vector<std::optional<double>> NarrowbandRatio(const ComplexGrid& mask,
                                                   const Spectrogram& source);

struct DirectionSample {
  double theta = 0.0;  // radians
  double ratio = 0.0;
};

// Mean ratio per distinct direction. Angles are keyed after rounding to
// 1e-9 degrees so grid angles computed along different paths group together.
struct PatternEstimate {
  std::map<double, double> mean_ratio;  // degrees -> mean ratio
  std::map<double, int> count;
};

PatternEstimate AggregatePattern(std::span<const DirectionSample> samples);

// 10 log10(|z|^2 / |z - zhat|^2), capped at +100 dB.
double Sdr(std::span<const double> target, std::span<const double> estimate);

}  // namespace undf
