#pragma once

#include <cstdint>
#include <vector>

#include "undf/neural_filter.h"
#include "undf/pattern.h"
#include "undf/scene.h"
#include "undf/stft.h"

namespace undf {

// Network input for a rendered scene: STFT of every mic, stacked.
FeatureBlock SceneFeatures(const RenderedScene& scene, const StftConfig& cfg);

// Conditioning vector for a pattern (analytic patterns are sampled and floored).
PatternVector ConditioningVector(const GainPattern& pattern, int length);

// One training/evaluation sample: features, reference spectrogram, the
// conditioning vector(s) and the target built from the same pattern(s).
TrainingExample MakeExample(const RenderedScene& scene, const std::vector<GainPattern>& patterns,
                            int pattern_length, const StftConfig& cfg);

// Expands a timeline of (start_frame, pattern) into one pattern per frame.
struct TimelineEntry {
  int start_frame = 0;
  GainPattern pattern;
};
std::vector<GainPattern> ExpandTimeline(const std::vector<TimelineEntry>& timeline, int frames);
void ValidateTimeline(const std::vector<TimelineEntry>& timeline);

}  // namespace undf
