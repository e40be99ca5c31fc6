#pragma once

#include <vector>

#include "undf/pattern.h"
#include "undf/stft.h"

namespace undf {

// Per-source reference-mic spectrograms with their true DOAs.
struct OracleScene {
  std::vector<Spectrogram> sources;
  std::vector<double> doas;

  void Validate() const;
};

// Dominant-source oracle filter: each bin takes the pattern gain of the
// source with the largest |X_{ref,n}[t,f]| (lowest index wins ties). The
// mask is real and non-negative. `patterns` is one static pattern or one
// per frame.
ComplexGrid OracleFilter(const OracleScene& oracle, const std::vector<GainPattern>& patterns);

}  // namespace undf
