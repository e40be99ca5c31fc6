#include "undf/dataset.h"

#include "undf/errors.h"

namespace undf {

FeatureBlock SceneFeatures(const RenderedScene& scene, const StftConfig& cfg) {
  std::vector<Spectrogram> specs;
  specs.reserve(scene.mic_signals.size());
  for (const auto& mic : scene.mic_signals) specs.push_back(Stft(mic, cfg));
  return StackFeatures(specs);
}

PatternVector ConditioningVector(const GainPattern& pattern, int length) {
  if (const auto* a = std::get_if<AnalyticPattern>(&pattern)) return SamplePattern(*a, length);
  const auto& v = std::get<PatternVector>(pattern);
  if (v.length() == length) return v;
  PatternVector out;
  out.gains.resize(length);
  for (int i = 0; i < length; ++i) out.gains[i] = InterpPattern(v, kTwoPi * i / length);
  return out;
}

TrainingExample MakeExample(const RenderedScene& scene, const std::vector<GainPattern>& patterns,
                            int pattern_length, const StftConfig& cfg) {
  if (patterns.empty()) throw ValidationError("example: at least one pattern required");
  TrainingExample ex;
  ex.features = SceneFeatures(scene, cfg);
  ex.reference = Stft(scene.reference(), cfg);
  if (patterns.size() != 1 && static_cast<int>(patterns.size()) != ex.reference.frames()) {
    throw ValidationError("example: pattern sequence length must be 1 or T");
  }
  for (const auto& p : patterns) ex.patterns.push_back(ConditioningVector(p, pattern_length));
  ex.target = RenderTarget(scene, patterns, cfg);
  return ex;
}

void ValidateTimeline(const std::vector<TimelineEntry>& timeline) {
  if (timeline.empty()) throw ValidationError("timeline: empty");
  if (timeline.front().start_frame != 0) throw ValidationError("timeline: must start at frame 0");
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    if (timeline[i].start_frame <= timeline[i - 1].start_frame) {
      throw ValidationError("timeline: entries overlap or are out of order at index " +
                            std::to_string(i));
    }
  }
}

std::vector<GainPattern> ExpandTimeline(const std::vector<TimelineEntry>& timeline, int frames) {
  ValidateTimeline(timeline);
  if (timeline.size() == 1) return {timeline.front().pattern};
  std::vector<GainPattern> out;
  out.reserve(frames);
  std::size_t k = 0;
  for (int t = 0; t < frames; ++t) {
    while (k + 1 < timeline.size() && timeline[k + 1].start_frame <= t) ++k;
    out.push_back(timeline[k].pattern);
  }
  return out;
}

}  // namespace undf
