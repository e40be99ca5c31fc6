#include "undf/pipeline.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "undf/baseline.h"
#include "undf/errors.h"
#include "undf/wav.h"

namespace undf {

namespace fs = std::filesystem;

namespace {

constexpr double kDbFloorMagnitude = 1e-12;

std::uint64_t SplitSalt(Split split) {
  switch (split) {
    case Split::kTrain:
      return 0x7261696eULL;
    case Split::kVal:
      return 0x76616c00ULL;
    case Split::kTest:
      return 0x74657374ULL;
  }
  return 0;
}

std::vector<GainPattern> AsGainPatterns(const std::vector<AnalyticPattern>& patterns) {
  return {patterns.begin(), patterns.end()};
}

Eigen::MatrixXd MagnitudeDb(const ComplexGrid& grid) {
  Eigen::MatrixXd out(grid.rows(), grid.cols());
  for (Eigen::Index t = 0; t < grid.rows(); ++t) {
    for (Eigen::Index f = 0; f < grid.cols(); ++f) {
      out(t, f) = 20.0 * std::log10(std::max(std::abs(grid(t, f)), kDbFloorMagnitude));
    }
  }
  return out;
}

long long DirectionKey(double deg) { return std::llround(deg * 1e9); }

struct DirectionAccumulator {
  double theta_deg = 0.0;
  double target_gain = 0.0;
  double wideband_sum = 0.0;
  std::vector<double> nb_sum;
  std::vector<int> nb_count;
  int count = 0;
};

using DirectionMap = std::map<std::pair<int, long long>, DirectionAccumulator>;

void Accumulate(DirectionMap& acc, int pattern_index, double doa, const GainPattern& pattern,
                const ComplexGrid& mask, const Spectrogram& source) {
  const double deg = RadToDeg(doa);
  auto& a = acc[{pattern_index, DirectionKey(deg)}];
  if (a.count == 0) {
    a.theta_deg = deg;
    a.target_gain = GainAt(pattern, doa);
    a.nb_sum.assign(source.bins(), 0.0);
    a.nb_count.assign(source.bins(), 0);
  }
  a.wideband_sum += WidebandRatio(mask, source);
  const auto nb = NarrowbandRatio(mask, source);
  for (std::size_t f = 0; f < nb.size(); ++f) {
    if (nb[f]) {
      a.nb_sum[f] += *nb[f];
      ++a.nb_count[f];
    }
  }
  ++a.count;
}

std::vector<DirectionEstimate> Finish(const DirectionMap& acc) {
  std::vector<DirectionEstimate> out;
  for (const auto& [key, a] : acc) {
    DirectionEstimate d;
    d.pattern_index = key.first;
    d.theta_deg = a.theta_deg;
    d.target_gain = a.target_gain;
    d.count = a.count;
    d.wideband = a.wideband_sum / a.count;
    d.narrowband.resize(a.nb_sum.size());
    for (std::size_t f = 0; f < a.nb_sum.size(); ++f) {
      d.narrowband[f] = a.nb_count[f] > 0 ? a.nb_sum[f] / a.nb_count[f]
                                          : std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(d));
  }
  return out;
}

Json DirectionsJson(const std::vector<DirectionEstimate>& dirs) {
  Json arr = Json::array();
  for (const auto& d : dirs) {
    Json nb = Json::array();
    for (double v : d.narrowband) nb.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
    arr.push_back({{"pattern", d.pattern_index},
                   {"theta_deg", d.theta_deg},
                   {"xi", d.wideband},
                   {"xi_db", 10.0 * std::log10(d.wideband)},
                   {"amplitude", std::sqrt(d.wideband)},
                   {"target_gain", d.target_gain},
                   {"target_db", 20.0 * std::log10(d.target_gain)},
                   {"count", d.count},
                   {"narrowband", nb}});
  }
  return arr;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void ExperimentConfig::Validate() const {
  stft.Validate();
  arch.Validate();
  recipe.Validate();
  train.Validate();
  const int q = BuildDefaultArray().num_mics();
  if (arch.mics != q) {
    throw ValidationError("config: arch.mics is " + std::to_string(arch.mics) + " but the array has " +
                          std::to_string(q) + " microphones");
  }
  if (arch.bins != stft.num_bins()) {
    throw ValidationError("config: arch.bins is " + std::to_string(arch.bins) + " but the STFT gives " +
                          std::to_string(stft.num_bins()));
  }
  if (scenes.sample_rate != stft.sample_rate) {
    throw ValidationError("config: scene and STFT sample rates differ");
  }
  if (train_scenes < 1 || val_scenes < 0 || test_scenes < 0) {
    throw ValidationError("config: scene counts must be non-negative (train >= 1)");
  }
}

Json ExperimentConfigToJson(const ExperimentConfig& c) {
  return {{"stft", StftConfigToJson(c.stft)},
          {"arch", ArchConfigToJson(c.arch)},
          {"recipe", RecipeConfigToJson(c.recipe)},
          {"train", TrainConfigToJson(c.train)},
          {"scenes", SceneSamplingToJson(c.scenes)},
          {"train_scenes", c.train_scenes},
          {"val_scenes", c.val_scenes},
          {"test_scenes", c.test_scenes},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()}};
}

ExperimentConfig ExperimentConfigFromJson(const Json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  ExperimentConfig c;
  if (j.contains("stft")) c.stft = StftConfigFromJson(j.at("stft"));
  Json arch = j.contains("arch") ? j.at("arch") : Json::object();
  if (!arch.contains("bins")) arch["bins"] = c.stft.num_bins();
  c.arch = ArchConfigFromJson(arch);
  if (j.contains("recipe")) c.recipe = RecipeConfigFromJson(j.at("recipe"));
  if (j.contains("train")) c.train = TrainConfigFromJson(j.at("train"));
  Json scenes = j.contains("scenes") ? j.at("scenes") : Json::object();
  if (!scenes.contains("sample_rate")) scenes["sample_rate"] = c.stft.sample_rate;
  c.scenes = SceneSamplingFromJson(scenes);
  c.train_scenes = FieldOr<int>(j, "train_scenes", c.train_scenes);
  c.val_scenes = FieldOr<int>(j, "val_scenes", c.val_scenes);
  c.test_scenes = FieldOr<int>(j, "test_scenes", c.test_scenes);
  c.seed = FieldOr<std::uint64_t>(j, "seed", c.seed);
  c.output_dir = FieldOr<std::string>(j, "output_dir", c.output_dir.string());
  c.Validate();
  return c;
}

std::vector<AnalyticPattern> RecipePatterns(const RecipeConfig& cfg) {
  cfg.Validate();
  std::mt19937_64 rng(cfg.rng_seed);
  return GenRecipeBatch(cfg, rng);
}

ExportFormat ParseExportFormat(const std::string& name) {
  if (name == "csv") return ExportFormat::kCsv;
  if (name == "json") return ExportFormat::kJson;
  throw ValidationError("unknown export format '" + name + "' (expected csv, json)");
}

std::vector<fs::path> ExportPatterns(const std::vector<AnalyticPattern>& patterns, int length,
                                     ExportFormat format, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> out;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "pattern_%03zu.%s", i, format == ExportFormat::kCsv ? "csv" : "json");
    const fs::path path = dir / name;
    const PatternVector v = SamplePattern(patterns[i], length);
    if (format == ExportFormat::kCsv) {
      std::ofstream f(path);
      if (!f) throw ValidationError("cannot write " + path.string());
      f << PatternCsv(v);
    } else {
      Json j = PatternVectorToJson(v);
      j["spec"] = AnalyticPatternToJson(patterns[i]);
      WriteJsonFile(path, j);
    }
    out.push_back(path);
  }
  return out;
}

RenderedScene SimulateToDirectory(const SceneSpec& scene, const fs::path& dir) {
  const ArrayGeometry geom = BuildDefaultArray();
  RenderedScene r = RenderMics(scene, geom);
  fs::create_directories(dir);
  WriteWav(dir / "mics.wav", WavData{r.sample_rate, r.mic_signals});
  Json sources = Json::array();
  for (std::size_t n = 0; n < r.ref_components.size(); ++n) {
    char name[32];
    std::snprintf(name, sizeof(name), "source_%02zu.wav", n);
    WriteWav(dir / name, WavData{r.sample_rate, {r.ref_components[n]}});
    sources.push_back({{"doa_deg", RadToDeg(scene.sources[n].doa)},
                       {"distance_m", scene.sources[n].distance},
                       {"component_wav", name}});
  }
  Json mics = Json::array();
  for (const auto& p : geom.mic_positions) mics.push_back({p[0], p[1], p[2]});
  Json desc = {{"sample_rate", r.sample_rate},
               {"duration_s", scene.duration},
               {"num_samples", scene.num_samples()},
               {"seed", scene.rng_seed},
               {"reference_index", r.reference_index},
               {"mic_positions_m", mics},
               {"sources", sources},
               {"mics_wav", "mics.wav"}};
  desc["noise_snr_db"] = scene.noise_snr_db ? Json(*scene.noise_snr_db) : Json(nullptr);
  WriteJsonFile(dir / "scene.json", desc);
  return r;
}

SceneSet SampleScenes(Split split, int count, std::uint64_t seed, const SceneSamplingConfig& cfg) {
  std::mt19937_64 rng(seed ^ SplitSalt(split));
  const ArrayGeometry geom = BuildDefaultArray();
  SceneSet set;
  for (int i = 0; i < count; ++i) set.scenes.push_back(RenderMics(SampleScene(split, rng, cfg), geom));
  return set;
}

std::vector<TrainingExample> BuildExamples(const SceneSet& scenes, const std::vector<GainPattern>& patterns,
                                           int pattern_length, const StftConfig& cfg) {
  std::vector<TrainingExample> out;
  out.reserve(scenes.scenes.size() * patterns.size());
  for (const auto& scene : scenes.scenes) {
    for (const auto& p : patterns) out.push_back(MakeExample(scene, {p}, pattern_length, cfg));
  }
  return out;
}

TrainOutcome TrainExperiment(const ExperimentConfig& cfg, bool write, const TrainProgress& progress) {
  cfg.Validate();
  const auto patterns = AsGainPatterns(RecipePatterns(cfg.recipe));
  const SceneSet scenes = SampleScenes(Split::kTrain, cfg.train_scenes, cfg.seed, cfg.scenes);
  const auto data = BuildExamples(scenes, patterns, cfg.arch.pattern_length, cfg.stft);
  TrainOutcome out;
  out.result = Train(cfg.arch, cfg.train, data, std::nullopt, progress);
  out.checkpoint.arch = cfg.arch;
  out.checkpoint.stft = cfg.stft;
  out.checkpoint.params = out.result.params;
  out.checkpoint.metadata = {{"steps", out.result.steps},
                             {"examples", data.size()},
                             {"final_epoch_loss", out.result.epoch_loss.empty()
                                                      ? Json(nullptr)
                                                      : Json(out.result.epoch_loss.back())},
                             {"config", ExperimentConfigToJson(cfg)}};
  // The output location is not part of the model.
  out.checkpoint.metadata["config"].erase("output_dir");
  if (write) {
    fs::create_directories(cfg.output_dir);
    SaveCheckpoint(cfg.output_dir / "model.ckpt", out.checkpoint);
    WriteLossCsv(cfg.output_dir / "loss.csv", out.result.step_loss);
    WriteJsonFile(cfg.output_dir / "config.json", ExperimentConfigToJson(cfg));
  }
  return out;
}

FilterMethod ParseFilterMethod(const std::string& name) {
  if (name == "neural") return FilterMethod::kNeural;
  if (name == "parametric-oracle") return FilterMethod::kParametricOracle;
  throw ValidationError("unknown method '" + name + "' (expected neural, parametric-oracle)");
}

std::string FilterMethodName(FilterMethod method) {
  return method == FilterMethod::kNeural ? "neural" : "parametric-oracle";
}

Filter Filter::Oracle(StftConfig stft) {
  stft.Validate();
  Filter f;
  f.method_ = FilterMethod::kParametricOracle;
  f.stft_ = std::move(stft);
  return f;
}

Filter Filter::Neural(std::shared_ptr<const Checkpoint> model) {
  if (!model) throw ValidationError("neural filter: no model loaded");
  model->params.CheckShapes(model->arch);
  Filter f;
  f.method_ = FilterMethod::kNeural;
  f.stft_ = model->stft;
  f.model_ = std::move(model);
  return f;
}

int Filter::pattern_length() const {
  return model_ ? model_->arch.pattern_length : kDefaultPatternLength;
}

ComplexGrid Filter::Mask(const RenderedScene& scene, const std::vector<GainPattern>& patterns) const {
  if (scene.sample_rate != stft_.sample_rate) {
    throw ValidationError("filter: scene is at " + std::to_string(scene.sample_rate) + " Hz, filter expects " +
                          std::to_string(stft_.sample_rate) + " Hz");
  }
  if (method_ == FilterMethod::kParametricOracle) {
    if (scene.ref_components.empty()) {
      throw ValidationError("parametric-oracle needs per-source components and DOAs (simulated scenes only)");
    }
    OracleScene oracle;
    for (const auto& c : scene.ref_components) oracle.sources.push_back(Stft(c, stft_));
    oracle.doas = scene.doas;
    return OracleFilter(oracle, patterns);
  }
  const ArchConfig& arch = model_->arch;
  if (static_cast<int>(scene.mic_signals.size()) != arch.mics) {
    throw ValidationError("filter: scene has " + std::to_string(scene.mic_signals.size()) +
                          " microphones, model expects " + std::to_string(arch.mics));
  }
  const FeatureBlock features = SceneFeatures(scene, stft_);
  std::vector<PatternVector> cond;
  cond.reserve(patterns.size());
  for (const auto& p : patterns) cond.push_back(ConditioningVector(p, arch.pattern_length));
  PatternBatch batch;
  if (cond.size() == 1) {
    batch = PatternBatch::Static(cond);
  } else {
    const std::vector<std::vector<PatternVector>> per_item{std::move(cond)};
    batch = PatternBatch::PerFrame(per_item);
  }
  return Forward(model_->params, arch, features, batch).front();
}

TimelineRender ProcessTimeline(const RenderedScene& scene, const std::vector<TimelineEntry>& timeline,
                               const Filter& filter) {
  ValidateTimeline(timeline);
  const StftConfig& cfg = filter.stft();
  const Spectrogram y = Stft(scene.reference(), cfg);
  const int frames = y.frames();
  if (timeline.back().start_frame >= frames) {
    throw ValidationError("timeline: start_frame " + std::to_string(timeline.back().start_frame) +
                          " is beyond the last frame (" + std::to_string(frames - 1) + ")");
  }
  const auto expanded = ExpandTimeline(timeline, frames);
  const ComplexGrid mask = filter.Mask(scene, expanded);
  const Spectrogram zhat = ApplyMask(mask, y);

  TimelineRender r;
  r.unprocessed = scene.reference();
  r.processed = Istft(zhat);
  for (const auto& e : timeline) r.segment_patterns.push_back(ConditioningVector(e.pattern, filter.pattern_length()));
  r.frame_pattern_index.resize(frames);
  for (int t = 0, k = 0; t < frames; ++t) {
    while (k + 1 < static_cast<int>(timeline.size()) && timeline[k + 1].start_frame <= t) ++k;
    r.frame_pattern_index[t] = k;
  }
  r.source_gains = TargetGains(expanded, scene.doas, frames);
  r.unprocessed_db = MagnitudeDb(y.data);
  r.processed_db = MagnitudeDb(zhat.data);
  if (!scene.ref_components.empty()) {
    r.target = RenderTarget(scene, expanded, cfg);
    r.sdr = Sdr(*r.target, r.processed);
    r.sdr_unprocessed = Sdr(*r.target, r.unprocessed);
  }
  return r;
}

std::vector<TimelineEntry> EqualSegments(const std::vector<GainPattern>& patterns, int frames) {
  if (patterns.empty()) throw ValidationError("timeline: no patterns");
  if (frames < static_cast<int>(patterns.size())) throw ValidationError("timeline: more segments than frames");
  std::vector<TimelineEntry> out;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    out.push_back({static_cast<int>(i * frames / patterns.size()), patterns[i]});
  }
  return out;
}

RenderedScene SingleSourceScene(double doa, const SceneSamplingConfig& cfg, std::uint64_t seed) {
  SceneSpec spec;
  spec.duration = cfg.duration;
  spec.sample_rate = cfg.sample_rate;
  spec.noise_snr_db = cfg.noise_snr_db;
  spec.rng_seed = seed;
  SourceSpec src;
  src.doa = doa;
  src.distance = cfg.distance;
  src.signal = GenerateSynthetic({SyntheticKind::kSpeechShapedNoise, seed, 0.0}, spec.num_samples(),
                                 spec.sample_rate);
  spec.sources.push_back(std::move(src));
  return RenderMics(spec, BuildDefaultArray());
}

EvalReport Evaluate(const Filter& filter, const EvalOptions& options) {
  if (options.patterns.empty()) throw ValidationError("eval: at least one pattern required");
  const StftConfig& cfg = filter.stft();
  EvalReport report;
  report.method = FilterMethodName(filter.method());

  DirectionMap dirs;
  const SceneSet scenes = SampleScenes(options.split, options.num_scenes, options.seed, options.scenes);
  for (const auto& scene : scenes.scenes) {
    std::vector<Spectrogram> comps;
    for (const auto& c : scene.ref_components) comps.push_back(Stft(c, cfg));
    for (std::size_t p = 0; p < options.patterns.size(); ++p) {
      const std::vector<GainPattern> pat{options.patterns[p]};
      const ComplexGrid mask = filter.Mask(scene, pat);
      const auto estimate = Istft(ApplyMask(mask, Stft(scene.reference(), cfg)));
      const auto target = RenderTarget(scene, pat, cfg);
      report.sdr.push_back(Sdr(target, estimate));
      report.sdr_unprocessed.push_back(Sdr(target, scene.reference()));
      for (std::size_t n = 0; n < comps.size(); ++n) {
        Accumulate(dirs, static_cast<int>(p), scene.doas[n], options.patterns[p], mask, comps[n]);
      }
    }
  }
  report.directions = Finish(dirs);

  if (options.single_source_sweep) {
    DirectionMap sweep;
    const auto grid = DoaGrid(options.split);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const RenderedScene scene = SingleSourceScene(grid[i], options.scenes, options.seed + i);
      const Spectrogram comp = Stft(scene.ref_components.front(), cfg);
      for (std::size_t p = 0; p < options.patterns.size(); ++p) {
        const ComplexGrid mask = filter.Mask(scene, {options.patterns[p]});
        Accumulate(sweep, static_cast<int>(p), grid[i], options.patterns[p], mask, comp);
      }
    }
    report.sweep = Finish(sweep);
  }
  return report;
}

double EvalReport::mean_sdr() const { return Mean(sdr); }
double EvalReport::mean_sdr_unprocessed() const { return Mean(sdr_unprocessed); }

Json EvalReport::ToJson() const {
  Json j = {{"method", method},
            {"sdr_db", sdr},
            {"sdr_unprocessed_db", sdr_unprocessed},
            {"directions", DirectionsJson(directions)}};
  j["mean_sdr_db"] = sdr.empty() ? Json(nullptr) : Json(mean_sdr());
  j["mean_sdr_unprocessed_db"] = sdr.empty() ? Json(nullptr) : Json(mean_sdr_unprocessed());
  if (!sweep.empty()) j["sweep"] = DirectionsJson(sweep);
  return j;
}

std::string EvalReport::DirectionsCsv(bool use_sweep) const {
  std::ostringstream out;
  out << std::setprecision(17) << "pattern,theta_deg,xi,xi_db,amplitude,target_gain,target_db,count\n";
  for (const auto& d : use_sweep ? sweep : directions) {
    out << d.pattern_index << "," << d.theta_deg << "," << d.wideband << "," << 10.0 * std::log10(d.wideband)
        << "," << std::sqrt(d.wideband) << "," << d.target_gain << "," << 20.0 * std::log10(d.target_gain)
        << "," << d.count << "\n";
  }
  return out.str();
}

std::string EvalReport::NarrowbandCsv(bool use_sweep) const {
  std::ostringstream out;
  out << std::setprecision(17) << "pattern,theta_deg,bin,ratio,ratio_db\n";
  for (const auto& d : use_sweep ? sweep : directions) {
    for (std::size_t f = 0; f < d.narrowband.size(); ++f) {
      if (std::isnan(d.narrowband[f])) continue;
      out << d.pattern_index << "," << d.theta_deg << "," << f << "," << d.narrowband[f] << ","
          << 10.0 * std::log10(d.narrowband[f]) << "\n";
    }
  }
  return out.str();
}

}  // namespace undf
