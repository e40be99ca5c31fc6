#pragma once

// JSON / CSV representations of patterns, scenes, timelines and configs.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "undf/errors.h"
#include "undf/dataset.h"
#include "undf/neural_filter.h"
#include "undf/pattern.h"
#include "undf/scene.h"
#include "undf/stft.h"

namespace undf {

using Json = nlohmann::json;

Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& value);

// {"l": L, "gains": [...]}; "l" must equal the gain count, gains in [0, 1].
Json PatternVectorToJson(const PatternVector& v);
PatternVector PatternVectorFromJson(const Json& j, int expected_length = 0);

// Component specs use the type field names (angles in radians); *_deg
// variants are accepted on input.
Json ComponentToJson(const PatternComponent& c);
PatternComponent ComponentFromJson(const Json& j);
Json AnalyticPatternToJson(const AnalyticPattern& p);
AnalyticPattern AnalyticPatternFromJson(const Json& j);

// Vector ({"gains": ...}), analytic ({"components": ...}) or a bare component.
GainPattern GainPatternFromJson(const Json& j);

// angle_deg,gain_linear,gain_db with one row per vector entry.
std::string PatternCsv(const PatternVector& v);

// [{"start_frame": 0, "gains": [...]} | {"start_frame": 0, "pattern": {...}}, ...]
// or {"timeline": [...]}.
std::vector<TimelineEntry> TimelineFromJson(const Json& j, int pattern_length = 0);

// sources: [{doa_deg, distance_m, wav_path | synthetic: {kind, seed, f0}}],
// noise_snr_db, duration_s, sample_rate, seed. Relative WAV paths resolve
// against `base_dir`.
SceneSpec SceneFromJson(const Json& j, const std::filesystem::path& base_dir = {});
SyntheticSourceSpec SyntheticFromJson(const Json& j);
Json SyntheticToJson(const SyntheticSourceSpec& s);

Json StftConfigToJson(const StftConfig& c);
StftConfig StftConfigFromJson(const Json& j);
Json ArchConfigToJson(const ArchConfig& c);
ArchConfig ArchConfigFromJson(const Json& j);
Json TrainConfigToJson(const TrainConfig& c);
TrainConfig TrainConfigFromJson(const Json& j);
Json RecipeConfigToJson(const RecipeConfig& c);
RecipeConfig RecipeConfigFromJson(const Json& j);
Json SceneSamplingToJson(const SceneSamplingConfig& c);
SceneSamplingConfig SceneSamplingFromJson(const Json& j);

// Reads a required field, reporting the key in the error message.
template <typename T>
T Field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T FieldOr(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return Field<T>(j, key);
}

}  // namespace undf
