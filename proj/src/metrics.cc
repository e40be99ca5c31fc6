#include "undf/metrics.h"

#include <cmath>

#include "undf/errors.h"
#include "undf/pattern.h"

namespace undf {

namespace {

void CheckShape(const ComplexGrid& mask, const Spectrogram& source, const char* who) {
  if (mask.rows() != source.data.rows() || mask.cols() != source.data.cols()) {
    throw ValidationError(std::string(who) + ": mask and source shapes differ");
  }
}

}  // namespace

double WidebandRatio(const ComplexGrid& mask, const Spectrogram& source) {
  CheckShape(mask, source, "wideband_ratio");
  const double den = source.data.abs2().sum();
  if (!(den > 0.0)) throw ValidationError("wideband_ratio: source has zero energy");
  return (mask * source.data).abs2().sum() / den;
}

std::vector<std::optional<double>> NarrowbandRatio(const ComplexGrid& mask,
                                                   const Spectrogram& source) {
  CheckShape(mask, source, "narrowband_ratio");
  std::vector<std::optional<double>> out(source.bins());
  for (int f = 0; f < source.bins(); ++f) {
    const double den = source.data.col(f).abs2().sum();
    if (den > 0.0) out[f] = (mask.col(f) * source.data.col(f)).abs2().sum() / den;
  }
  return out;
}

PatternEstimate AggregatePattern(std::span<const DirectionSample> samples) {
  if (samples.empty()) throw ValidationError("aggregate_pattern: no samples");
  std::map<double, double> sums;
  PatternEstimate est;
  for (const auto& s : samples) {
    const double deg = std::round(RadToDeg(NormalizeAngle(s.theta)) * 1e9) / 1e9;
    sums[deg] += s.ratio;
    est.count[deg] += 1;
  }
  for (const auto& [deg, sum] : sums) est.mean_ratio[deg] = sum / est.count[deg];
  return est;
}

double Sdr(std::span<const double> target, std::span<const double> estimate) {
  if (target.size() != estimate.size()) throw ValidationError("sdr: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    num += target[i] * target[i];
    const double e = target[i] - estimate[i];
    den += e * e;
  }
  if (!(num > 0.0)) throw ValidationError("sdr: target has zero energy");
  if (den == 0.0) return kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(num / den));
}

}  // namespace undf
