#include "undf/io.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "undf/errors.h"
#include "undf/wav.h"

namespace undf {

namespace {

double AngleField(const Json& j, const char* rad_key, const std::string& deg_key) {
  if (j.contains(deg_key)) return DegToRad(Field<double>(j, deg_key.c_str()));
  return Field<double>(j, rad_key);
}

}  // namespace

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& value) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << value.dump(2) << "\n";
}

Json PatternVectorToJson(const PatternVector& v) { return {{"l", v.length()}, {"gains", v.gains}}; }

PatternVector PatternVectorFromJson(const Json& j, int expected_length) {
  PatternVector v;
  v.gains = Field<std::vector<double>>(j, "gains");
  if (j.contains("l") && Field<int>(j, "l") != v.length()) {
    throw ValidationError("pattern: 'l' is " + std::to_string(Field<int>(j, "l")) + " but " +
                          std::to_string(v.length()) + " gains were given");
  }
  if (expected_length > 0 && v.length() != expected_length) {
    throw ValidationError("pattern: expected " + std::to_string(expected_length) + " gains, got " +
                          std::to_string(v.length()));
  }
  v.Validate();
  return v;
}

Json ComponentToJson(const PatternComponent& c) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SimplifiedDmaSpec>) {
          return {{"kind", "dma-simplified"}, {"mu", s.mu}, {"theta_s", s.theta_s}, {"order_j", s.order_j}};
        } else if constexpr (std::is_same_v<T, GeneralDmaSpec>) {
          return {{"kind", "dma-general"}, {"coeffs", s.coeffs}, {"theta_s", s.theta_s}};
        } else {
          return {{"kind", "rect"}, {"theta_start", s.theta_start}, {"theta_end", s.theta_end}};
        }
      },
      c);
}

PatternComponent ComponentFromJson(const Json& j) {
  const auto kind = Field<std::string>(j, "kind");
  if (kind == "dma-simplified") {
    SimplifiedDmaSpec s;
    s.mu = Field<double>(j, "mu");
    s.theta_s = NormalizeAngle(AngleField(j, "theta_s", "theta_s_deg"));
    s.order_j = FieldOr<int>(j, "order_j", 1);
    Validate(s);
    return s;
  }
  if (kind == "dma-general") {
    GeneralDmaSpec s;
    s.coeffs = Field<std::vector<double>>(j, "coeffs");
    s.theta_s = NormalizeAngle(AngleField(j, "theta_s", "theta_s_deg"));
    Validate(s);
    return s;
  }
  if (kind == "rect") {
    RectSpec s;
    s.theta_start = NormalizeAngle(AngleField(j, "theta_start", "theta_start_deg"));
    s.theta_end = NormalizeAngle(AngleField(j, "theta_end", "theta_end_deg"));
    Validate(s);
    return s;
  }
  throw ValidationError("pattern component: unknown kind '" + kind + "'");
}

Json AnalyticPatternToJson(const AnalyticPattern& p) {
  Json comps = Json::array();
  for (const auto& c : p.components()) comps.push_back(ComponentToJson(c));
  return {{"components", comps}, {"normalizer", p.normalizer()}, {"floor_db", p.floor_db()}};
}

AnalyticPattern AnalyticPatternFromJson(const Json& j) {
  const double floor_db = FieldOr<double>(j, "floor_db", kDefaultFloorDb);
  std::vector<PatternComponent> comps;
  if (j.contains("components")) {
    const auto& arr = j.at("components");
    if (!arr.is_array()) throw ValidationError("pattern: 'components' must be an array");
    for (const auto& c : arr) comps.push_back(ComponentFromJson(c));
  } else {
    comps.push_back(ComponentFromJson(j));
  }
  return AnalyticPattern::Combine(std::move(comps), floor_db);
}

GainPattern GainPatternFromJson(const Json& j) {
  if (!j.is_object()) throw ValidationError("pattern: expected a JSON object");
  if (j.contains("gains")) return PatternVectorFromJson(j);
  return AnalyticPatternFromJson(j);
}

std::string PatternCsv(const PatternVector& v) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "angle_deg,gain_linear,gain_db\n";
  for (int i = 0; i < v.length(); ++i) {
    const double g = v.gains[i];
    out << 360.0 * i / v.length() << "," << g << ",";
    if (g > 0.0) {
      out << 20.0 * std::log10(g);
    } else {
      out << "-inf";
    }
    out << "\n";
  }
  return out.str();
}

std::vector<TimelineEntry> TimelineFromJson(const Json& j, int pattern_length) {
  const Json& arr = j.is_object() && j.contains("timeline") ? j.at("timeline") : j;
  if (!arr.is_array()) throw ValidationError("timeline: expected an array of entries");
  std::vector<TimelineEntry> out;
  for (const auto& e : arr) {
    TimelineEntry entry;
    entry.start_frame = Field<int>(e, "start_frame");
    if (e.contains("gains")) {
      entry.pattern = PatternVectorFromJson(e, pattern_length);
    } else if (e.contains("pattern")) {
      entry.pattern = GainPatternFromJson(e.at("pattern"));
      if (auto* v = std::get_if<PatternVector>(&entry.pattern); v && pattern_length > 0 &&
                                                                 v->length() != pattern_length) {
        throw ValidationError("timeline: pattern length mismatch");
      }
    } else {
      throw ValidationError("timeline: entry needs 'gains' or 'pattern'");
    }
    out.push_back(std::move(entry));
  }
  ValidateTimeline(out);
  return out;
}

SyntheticSourceSpec SyntheticFromJson(const Json& j) {
  SyntheticSourceSpec s;
  s.kind = ParseSyntheticKind(FieldOr<std::string>(j, "kind", "speech-shaped-noise"));
  s.seed = FieldOr<std::uint64_t>(j, "seed", 0);
  s.f0 = FieldOr<double>(j, "f0", 0.0);
  return s;
}

Json SyntheticToJson(const SyntheticSourceSpec& s) {
  return {{"kind", SyntheticKindName(s.kind)}, {"seed", s.seed}, {"f0", s.f0}};
}

SceneSpec SceneFromJson(const Json& j, const std::filesystem::path& base_dir) {
  SceneSpec scene;
  scene.duration = FieldOr<double>(j, "duration_s", 4.0);
  scene.sample_rate = FieldOr<int>(j, "sample_rate", 16000);
  scene.rng_seed = FieldOr<std::uint64_t>(j, "seed", 0);
  if (j.contains("noise_snr_db") && !j.at("noise_snr_db").is_null()) {
    scene.noise_snr_db = Field<double>(j, "noise_snr_db");
  }
  if (!(scene.duration > 0.0)) throw ValidationError("scene: duration_s must be positive");
  const auto& sources = j.contains("sources") ? j.at("sources") : Json::array();
  if (!sources.is_array()) throw ValidationError("scene: 'sources' must be an array");
  const std::size_t len = scene.num_samples();
  for (const auto& s : sources) {
    SourceSpec src;
    src.doa = NormalizeAngle(AngleField(s, "doa", "doa_deg"));
    src.distance = FieldOr<double>(s, "distance_m", kDefaultDistance);
    if (s.contains("wav_path")) {
      std::filesystem::path p = Field<std::string>(s, "wav_path");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      const WavData wav = ReadWav(p);
      if (wav.num_channels() != 1) throw IngestionError(p.string() + ": source WAV must be mono");
      src.signal = wav.sample_rate == scene.sample_rate
                       ? wav.channels.front()
                       : Resample(wav.channels.front(), wav.sample_rate, scene.sample_rate);
    } else if (s.contains("synthetic")) {
      src.signal = GenerateSynthetic(SyntheticFromJson(s.at("synthetic")), len, scene.sample_rate);
    } else {
      throw ValidationError("scene: each source needs 'wav_path' or 'synthetic'");
    }
    scene.sources.push_back(std::move(src));
  }
  return scene;
}

Json StftConfigToJson(const StftConfig& c) {
  return {{"sample_rate", c.sample_rate}, {"win_len", c.win_len}, {"hop", c.hop}, {"window", c.window}};
}

StftConfig StftConfigFromJson(const Json& j) {
  StftConfig c;
  c.sample_rate = FieldOr<int>(j, "sample_rate", c.sample_rate);
  c.win_len = FieldOr<int>(j, "win_len", c.win_len);
  c.hop = FieldOr<int>(j, "hop", c.hop);
  c.window = FieldOr<std::string>(j, "window", c.window);
  c.Validate();
  return c;
}

Json ArchConfigToJson(const ArchConfig& c) {
  Json j = {{"arch", ArchName(c.arch)},
            {"mics", c.mics},
            {"pattern_length", c.pattern_length},
            {"bins", c.bins},
            {"bilstm_hidden", c.bilstm_hidden},
            {"unilstm_hidden", c.unilstm_hidden},
            {"feature_width", c.feature_width},
            {"recurrent", c.recurrent}};
  j["mask_bound"] = c.mask_bound ? Json(*c.mask_bound) : Json(nullptr);
  return j;
}

ArchConfig ArchConfigFromJson(const Json& j) {
  ArchConfig c;
  c.arch = ParseArch(FieldOr<std::string>(j, "arch", ArchName(c.arch)));
  c.mics = FieldOr<int>(j, "mics", c.mics);
  c.pattern_length = FieldOr<int>(j, "pattern_length", c.pattern_length);
  c.bins = FieldOr<int>(j, "bins", c.bins);
  c.bilstm_hidden = FieldOr<int>(j, "bilstm_hidden", c.bilstm_hidden);
  c.unilstm_hidden = FieldOr<int>(j, "unilstm_hidden", c.unilstm_hidden);
  c.feature_width = FieldOr<int>(j, "feature_width", 2 * c.bilstm_hidden);
  c.recurrent = FieldOr<bool>(j, "recurrent", true);
  if (j.contains("mask_bound") && !j.at("mask_bound").is_null()) c.mask_bound = Field<double>(j, "mask_bound");
  c.Validate();
  return c;
}

Json TrainConfigToJson(const TrainConfig& c) {
  Json j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
            {"epsilon", c.epsilon},             {"rng_seed", c.rng_seed},     {"beta1", c.beta1},
            {"beta2", c.beta2},                 {"adam_epsilon", c.adam_epsilon}};
  j["max_steps"] = c.max_steps ? Json(*c.max_steps) : Json(nullptr);
  return j;
}

TrainConfig TrainConfigFromJson(const Json& j) {
  TrainConfig c;
  c.learning_rate = FieldOr<double>(j, "learning_rate", c.learning_rate);
  c.batch_size = FieldOr<int>(j, "batch_size", c.batch_size);
  c.epochs = FieldOr<int>(j, "epochs", c.epochs);
  c.epsilon = FieldOr<double>(j, "epsilon", c.epsilon);
  c.rng_seed = FieldOr<std::uint64_t>(j, "rng_seed", c.rng_seed);
  c.beta1 = FieldOr<double>(j, "beta1", c.beta1);
  c.beta2 = FieldOr<double>(j, "beta2", c.beta2);
  c.adam_epsilon = FieldOr<double>(j, "adam_epsilon", c.adam_epsilon);
  if (j.contains("max_steps") && !j.at("max_steps").is_null()) c.max_steps = Field<int>(j, "max_steps");
  c.Validate();
  return c;
}

Json RecipeConfigToJson(const RecipeConfig& c) {
  return {{"recipe", RecipeName(c.recipe)},
          {"max_components", c.max_components},
          {"patterns_per_setup", c.patterns_per_setup},
          {"floor_db", c.floor_db},
          {"rng_seed", c.rng_seed}};
}

RecipeConfig RecipeConfigFromJson(const Json& j) {
  RecipeConfig c;
  c.recipe = ParseRecipe(FieldOr<std::string>(j, "recipe", RecipeName(c.recipe)));
  c.max_components = FieldOr<int>(j, "max_components", c.max_components);
  c.patterns_per_setup = FieldOr<int>(j, "patterns_per_setup", c.patterns_per_setup);
  c.floor_db = FieldOr<double>(j, "floor_db", c.floor_db);
  c.rng_seed = FieldOr<std::uint64_t>(j, "rng_seed", c.rng_seed);
  c.Validate();
  return c;
}

Json SceneSamplingToJson(const SceneSamplingConfig& c) {
  Json j = {{"duration_s", c.duration},
            {"sample_rate", c.sample_rate},
            {"distance_m", c.distance},
            {"max_train_sources", c.max_train_sources},
            {"test_sources", c.test_sources}};
  j["noise_snr_db"] = c.noise_snr_db ? Json(*c.noise_snr_db) : Json(nullptr);
  return j;
}

SceneSamplingConfig SceneSamplingFromJson(const Json& j) {
  SceneSamplingConfig c;
  c.duration = FieldOr<double>(j, "duration_s", c.duration);
  c.sample_rate = FieldOr<int>(j, "sample_rate", c.sample_rate);
  c.distance = FieldOr<double>(j, "distance_m", c.distance);
  c.max_train_sources = FieldOr<int>(j, "max_train_sources", c.max_train_sources);
  c.test_sources = FieldOr<int>(j, "test_sources", c.test_sources);
  if (j.contains("noise_snr_db") && !j.at("noise_snr_db").is_null()) {
    c.noise_snr_db = Field<double>(j, "noise_snr_db");
  }
  if (!(c.duration > 0.0) || c.sample_rate <= 0 || c.max_train_sources < 1 || c.test_sources < 1) {
    throw ValidationError("scene sampling: invalid settings");
  }
  return c;
}

}  // namespace undf
