#include "undf/baseline.h"

#include <cmath>

#include "undf/errors.h"
#include "undf/scene.h"

namespace undf {

void OracleScene::Validate() const {
  if (sources.empty()) throw ValidationError("oracle scene: at least one source required");
  if (sources.size() != doas.size()) throw ValidationError("oracle scene: one DOA per source required");
  for (const auto& s : sources) sources.front().CheckCompatible(s);
}

ComplexGrid OracleFilter(const OracleScene& oracle, const std::vector<GainPattern>& patterns) {
  oracle.Validate();
  const int frames = oracle.sources.front().frames();
  const int bins = oracle.sources.front().bins();
  const Eigen::MatrixXd gains = TargetGains(patterns, oracle.doas, frames);
  ComplexGrid mask(frames, bins);
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < bins; ++f) {
      std::size_t best = 0;
      double best_mag = std::abs(oracle.sources[0].data(t, f));
      for (std::size_t n = 1; n < oracle.sources.size(); ++n) {
        const double mag = std::abs(oracle.sources[n].data(t, f));
        if (mag > best_mag) {
          best = n;
          best_mag = mag;
        }
      }
      mask(t, f) = gains(t, static_cast<Eigen::Index>(best));
    }
  }
  return mask;
}

}  // namespace undf
