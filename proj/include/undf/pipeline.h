#pragma once

// Experiment orchestration shared by the CLI, the service and the Python
// bindings: pattern export, scene simulation, dataset building, training,
// evaluation and timeline filtering.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "undf/checkpoint.h"
#include "undf/dataset.h"
#include "undf/io.h"
#include "undf/metrics.h"
#include "undf/neural_filter.h"
#include "undf/pattern.h"
#include "undf/scene.h"
#include "undf/stft.h"

namespace undf {

struct ExperimentConfig {
  StftConfig stft;
  ArchConfig arch;
  RecipeConfig recipe;
  TrainConfig train;
  SceneSamplingConfig scenes;
  int train_scenes = 8;
  int val_scenes = 2;
  int test_scenes = 4;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "undf-out";

  // L, Q and F must agree between the array, the STFT and the network.
  void Validate() const;
};

Json ExperimentConfigToJson(const ExperimentConfig& c);
// Missing sections keep their defaults; arch.bins follows the STFT when omitted.
ExperimentConfig ExperimentConfigFromJson(const Json& j);

// Recipe A is the full enumeration; the random recipes draw
// patterns_per_setup patterns from the recipe seed.
std::vector<AnalyticPattern> RecipePatterns(const RecipeConfig& cfg);

enum class ExportFormat { kCsv, kJson };
ExportFormat ParseExportFormat(const std::string& name);

// One file per pattern (pattern_000.csv, ...); returns the written paths.
std::vector<std::filesystem::path> ExportPatterns(const std::vector<AnalyticPattern>& patterns,
                                                  int length, ExportFormat format,
                                                  const std::filesystem::path& dir);

// Writes mics.wav (Q channels), source_NN.wav (reference-mic components) and
// scene.json (resolved description) into `dir`.
RenderedScene SimulateToDirectory(const SceneSpec& scene, const std::filesystem::path& dir);

struct SceneSet {
  std::vector<RenderedScene> scenes;
};

// `count` scenes for a split, seeded by (seed, split).
SceneSet SampleScenes(Split split, int count, std::uint64_t seed, const SceneSamplingConfig& cfg);

// Every scene paired with every pattern (static conditioning).
std::vector<TrainingExample> BuildExamples(const SceneSet& scenes,
                                           const std::vector<GainPattern>& patterns,
                                           int pattern_length, const StftConfig& cfg);

struct TrainOutcome {
  Checkpoint checkpoint;
  TrainResult result;
};

// Samples train scenes, pairs them with the recipe patterns and trains.
// Writes model.ckpt, loss.csv and config.json when `write` is set.
TrainOutcome TrainExperiment(const ExperimentConfig& cfg, bool write = true,
                             const TrainProgress& progress = {});

enum class FilterMethod { kNeural, kParametricOracle };
FilterMethod ParseFilterMethod(const std::string& name);
std::string FilterMethodName(FilterMethod method);

// A mask estimator: the trained network or the oracle-DOA baseline.
class Filter {
 public:
  static Filter Oracle(StftConfig stft);
  static Filter Neural(std::shared_ptr<const Checkpoint> model);

  FilterMethod method() const { return method_; }
  const StftConfig& stft() const { return stft_; }
  int pattern_length() const;

  // `patterns` holds one static pattern or one per frame.
  ComplexGrid Mask(const RenderedScene& scene, const std::vector<GainPattern>& patterns) const;

 private:
  FilterMethod method_ = FilterMethod::kParametricOracle;
  StftConfig stft_;
  std::shared_ptr<const Checkpoint> model_;
};

struct TimelineRender {
  std::vector<double> unprocessed;  // reference mic
  std::vector<double> processed;
  std::vector<int> frame_pattern_index;   // T, index into segment_patterns
  std::vector<PatternVector> segment_patterns;
  Eigen::MatrixXd source_gains;     // T x N pattern gain at each source DOA
  Eigen::MatrixXd unprocessed_db;   // T x F, 20 log10 |Y|
  Eigen::MatrixXd processed_db;     // T x F
  std::optional<std::vector<double>> target;
  std::optional<double> sdr;
  std::optional<double> sdr_unprocessed;
};

// The pattern active at frame t conditions exactly frame t.
TimelineRender ProcessTimeline(const RenderedScene& scene, const std::vector<TimelineEntry>& timeline,
                               const Filter& filter);

// Splits a signal into `segments` equal frame ranges and gives each the
// corresponding pattern.
std::vector<TimelineEntry> EqualSegments(const std::vector<GainPattern>& patterns, int frames);

struct EvalOptions {
  Split split = Split::kTest;
  int num_scenes = 4;
  std::uint64_t seed = 0;
  SceneSamplingConfig scenes;
  std::vector<GainPattern> patterns;
  // Adds one single-source scene per direction of the split grid.
  bool single_source_sweep = false;
};

struct DirectionEstimate {
  int pattern_index = 0;
  double theta_deg = 0.0;
  double wideband = 0.0;                // mean xi
  std::vector<double> narrowband;       // per bin mean; NaN where no energy
  double target_gain = 0.0;             // pattern gain at theta
  int count = 0;
};

struct EvalReport {
  std::string method;
  std::vector<double> sdr;              // per scene x pattern
  std::vector<double> sdr_unprocessed;
  std::vector<DirectionEstimate> directions;
  std::vector<DirectionEstimate> sweep;  // single-source sweep, if requested

  double mean_sdr() const;
  double mean_sdr_unprocessed() const;
  Json ToJson() const;
  // pattern,theta_deg,xi,xi_db,amplitude,target_gain,target_db,count
  std::string DirectionsCsv(bool use_sweep = false) const;
  // pattern,theta_deg,bin,ratio,ratio_db
  std::string NarrowbandCsv(bool use_sweep = false) const;
};

EvalReport Evaluate(const Filter& filter, const EvalOptions& options);

// Single-source scene at `doa` with deterministic synthetic material.
RenderedScene SingleSourceScene(double doa, const SceneSamplingConfig& cfg, std::uint64_t seed);

}  // namespace undf
