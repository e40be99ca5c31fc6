// Command-line front end: patterns, simulate, train, eval, filter, serve.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "undf/checkpoint.h"
#include "undf/errors.h"
#include "undf/io.h"
#include "undf/pipeline.h"
#include "undf/service.h"
#include "undf/wav.h"

namespace fs = std::filesystem;
using namespace undf;

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::shared_ptr<const Checkpoint> MaybeModel(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const Checkpoint>(LoadCheckpoint(path));
}

Filter MakeFilter(const std::string& method, const std::string& model_path, const StftConfig& stft) {
  if (ParseFilterMethod(method) == FilterMethod::kNeural) {
    if (model_path.empty()) throw ValidationError("--method neural requires --model");
    return Filter::Neural(MaybeModel(model_path));
  }
  return Filter::Oracle(stft);
}

StftConfig StftFromFlags(int win, int hop, const std::string& window) {
  StftConfig c;
  c.win_len = win;
  c.hop = hop;
  c.window = window;
  c.Validate();
  return c;
}

HttpServer* g_server = nullptr;

void OnSignal(int) {
  if (g_server) g_server->Stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"undf: user-defined directional filtering toolkit"};
  app.require_subcommand(1);

  // patterns
  auto* patterns = app.add_subcommand("patterns", "Enumerate or export a pattern recipe");
  std::string recipe = "a";
  std::uint64_t recipe_seed = 0;
  int recipe_count = 60;
  int length = kDefaultPatternLength;
  std::string export_format;
  std::string patterns_out = "patterns";
  patterns->add_option("--recipe", recipe, "a, bminus, b or bplus")->capture_default_str();
  patterns->add_option("--seed", recipe_seed, "RNG seed for random recipes")->capture_default_str();
  patterns->add_option("--count", recipe_count, "patterns to draw for random recipes")->capture_default_str();
  patterns->add_option("--length", length, "pattern vector length L")->capture_default_str();
  patterns->add_option("--export", export_format, "csv or json; omit to print a summary");
  patterns->add_option("--out", patterns_out, "export directory")->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Render a scene to WAV + JSON");
  std::string scene_path;
  std::string sim_split;
  int sim_count = 1;
  std::uint64_t sim_seed = 0;
  double sim_duration = 4.0;
  std::string sim_out = "scene";
  auto* scene_opt = simulate->add_option("--scene", scene_path, "scene spec JSON");
  simulate->add_option("--split", sim_split, "sample scenes from a split grid instead (train, val, test)")
      ->excludes(scene_opt);
  simulate->add_option("--count", sim_count, "scenes to sample with --split")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "sampling seed")->capture_default_str();
  simulate->add_option("--duration", sim_duration, "seconds per sampled scene")->capture_default_str();
  simulate->add_option("--out", sim_out, "output directory")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a conditioned filter");
  std::string config_path;
  std::string train_out;
  int max_steps = 0;
  train->add_option("--config", config_path, "experiment config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "output directory (overrides the config)");
  train->add_option("--max-steps", max_steps, "stop after this many updates");

  // eval / filter share method selection
  std::string method = "parametric-oracle";
  std::string model_path;
  int win = 512;
  int hop = 256;
  std::string window = "sqrt-hann";

  auto* eval = app.add_subcommand("eval", "SDR tables and per-direction pattern estimates");
  std::vector<std::string> eval_patterns;
  std::string eval_recipe;
  std::string eval_split = "test";
  int eval_scenes = 4;
  std::uint64_t eval_seed = 0;
  double eval_duration = 4.0;
  bool sweep = false;
  std::string eval_out = "eval";
  eval->add_option("--method", method, "neural or parametric-oracle")->capture_default_str();
  eval->add_option("--model", model_path, "checkpoint for --method neural");
  eval->add_option("--pattern", eval_patterns, "pattern JSON (vector or analytic spec); repeatable");
  eval->add_option("--recipe", eval_recipe, "evaluate every pattern of a recipe (seed 0)");
  eval->add_option("--split", eval_split, "scene split")->capture_default_str();
  eval->add_option("--scenes", eval_scenes, "number of scenes")->capture_default_str();
  eval->add_option("--seed", eval_seed, "scene seed")->capture_default_str();
  eval->add_option("--duration", eval_duration, "seconds per scene")->capture_default_str();
  eval->add_flag("--sweep", sweep, "add a single-source sweep over the split grid");
  eval->add_option("--out", eval_out, "output directory")->capture_default_str();
  eval->add_option("--win", win, "STFT window (oracle only)")->capture_default_str();
  eval->add_option("--hop", hop, "STFT hop (oracle only)")->capture_default_str();

  auto* filter = app.add_subcommand("filter", "Offline processing with a pattern timeline");
  std::string filter_scene;
  std::string filter_mics;
  std::string timeline_path;
  std::vector<std::string> segment_patterns;
  std::string filter_out = "processed.wav";
  std::string report_path;
  filter->add_option("--method", method, "neural or parametric-oracle")->capture_default_str();
  filter->add_option("--model", model_path, "checkpoint for --method neural");
  auto* fs_opt = filter->add_option("--scene", filter_scene, "scene spec JSON");
  filter->add_option("--mics", filter_mics, "multichannel recording (neural only)")->excludes(fs_opt);
  auto* tl_opt = filter->add_option("--timeline", timeline_path, "timeline JSON");
  filter->add_option("--segment-pattern", segment_patterns, "pattern JSON; repeat for equal-length segments")
      ->excludes(tl_opt);
  filter->add_option("--out", filter_out, "processed WAV")->capture_default_str();
  filter->add_option("--report", report_path, "JSON report with per-frame gains and SDR");
  filter->add_option("--win", win, "STFT window (oracle only)")->capture_default_str();
  filter->add_option("--hop", hop, "STFT hop (oracle only)")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_root = ".";
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--model", model_path, "checkpoint enabling method 'neural'");
  serve->add_option("--data-root", data_root, "directory scene specs may read WAVs from")->capture_default_str();
  serve->add_option("--win", win, "STFT window when no model is given")->capture_default_str();
  serve->add_option("--hop", hop, "STFT hop when no model is given")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*patterns) {
      RecipeConfig cfg;
      cfg.recipe = ParseRecipe(recipe);
      cfg.rng_seed = recipe_seed;
      cfg.patterns_per_setup = recipe_count;
      const auto pats = RecipePatterns(cfg);
      if (export_format.empty()) {
        Json out = {{"recipe", RecipeName(cfg.recipe)}, {"count", pats.size()}, {"patterns", Json::array()}};
        for (const auto& p : pats) out["patterns"].push_back(AnalyticPatternToJson(p));
        std::cout << out.dump(2) << "\n";
      } else {
        const auto files = ExportPatterns(pats, length, ParseExportFormat(export_format), patterns_out);
        std::cout << "wrote " << files.size() << " files to " << patterns_out << "\n";
      }
    } else if (*simulate) {
      if (scene_path.empty() && sim_split.empty()) throw ValidationError("simulate needs --scene or --split");
      if (!scene_path.empty()) {
        const SceneSpec spec = SceneFromJson(ReadJsonFile(scene_path), fs::path(scene_path).parent_path());
        SimulateToDirectory(spec, sim_out);
        std::cout << "wrote " << sim_out << "\n";
      } else {
        SceneSamplingConfig sc;
        sc.duration = sim_duration;
        std::mt19937_64 rng(sim_seed);
        for (int i = 0; i < sim_count; ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "scene_%03d", i);
          SimulateToDirectory(SampleScene(ParseSplit(sim_split), rng, sc), fs::path(sim_out) / name);
        }
        std::cout << "wrote " << sim_count << " scenes to " << sim_out << "\n";
      }
    } else if (*train) {
      ExperimentConfig cfg = ExperimentConfigFromJson(ReadJsonFile(config_path));
      if (!train_out.empty()) cfg.output_dir = train_out;
      if (max_steps > 0) cfg.train.max_steps = max_steps;
      const auto outcome = TrainExperiment(cfg, true, [](int step, double loss) {
        if (step % 10 == 0) std::cerr << "step " << step << " loss " << loss << "\n";
      });
      std::cout << "trained " << outcome.result.steps << " steps; model at " << (cfg.output_dir / "model.ckpt").string()
                << "\n";
    } else if (*eval) {
      const Filter f = MakeFilter(method, model_path, StftFromFlags(win, hop, window));
      EvalOptions opt;
      opt.split = ParseSplit(eval_split);
      opt.num_scenes = eval_scenes;
      opt.seed = eval_seed;
      opt.scenes.duration = eval_duration;
      opt.scenes.sample_rate = f.stft().sample_rate;
      opt.single_source_sweep = sweep;
      for (const auto& p : eval_patterns) opt.patterns.push_back(GainPatternFromJson(ReadJsonFile(p)));
      if (!eval_recipe.empty()) {
        RecipeConfig rc;
        rc.recipe = ParseRecipe(eval_recipe);
        for (auto& p : RecipePatterns(rc)) opt.patterns.push_back(std::move(p));
      }
      if (opt.patterns.empty()) throw ValidationError("eval needs --pattern or --recipe");
      const EvalReport rep = Evaluate(f, opt);
      fs::create_directories(eval_out);
      WriteJsonFile(fs::path(eval_out) / "metrics.json", rep.ToJson());
      WriteText(fs::path(eval_out) / "directions.csv", rep.DirectionsCsv());
      WriteText(fs::path(eval_out) / "narrowband.csv", rep.NarrowbandCsv());
      if (sweep) {
        WriteText(fs::path(eval_out) / "sweep.csv", rep.DirectionsCsv(true));
        WriteText(fs::path(eval_out) / "sweep_narrowband.csv", rep.NarrowbandCsv(true));
      }
      std::cout << Json{{"method", rep.method},
                        {"mean_sdr_db", rep.mean_sdr()},
                        {"mean_sdr_unprocessed_db", rep.mean_sdr_unprocessed()},
                        {"out", eval_out}}
                       .dump(2)
                << "\n";
    } else if (*filter) {
      const Filter f = MakeFilter(method, model_path, StftFromFlags(win, hop, window));
      RenderedScene scene;
      if (!filter_scene.empty()) {
        scene = RenderMics(SceneFromJson(ReadJsonFile(filter_scene), fs::path(filter_scene).parent_path()),
                           BuildDefaultArray());
      } else if (!filter_mics.empty()) {
        const WavData w = ReadWav(filter_mics);
        scene.sample_rate = w.sample_rate;
        scene.mic_signals = w.channels;
      } else {
        throw ValidationError("filter needs --scene or --mics");
      }
      std::vector<TimelineEntry> timeline;
      if (!timeline_path.empty()) {
        timeline = TimelineFromJson(ReadJsonFile(timeline_path), f.pattern_length());
      } else if (!segment_patterns.empty()) {
        std::vector<GainPattern> pats;
        for (const auto& p : segment_patterns) pats.push_back(GainPatternFromJson(ReadJsonFile(p)));
        timeline = EqualSegments(pats, f.stft().NumFrames(scene.reference().size()));
      } else {
        throw ValidationError("filter needs --timeline or --segment-pattern");
      }
      const TimelineRender r = ProcessTimeline(scene, timeline, f);
      WriteWav(filter_out, WavData{scene.sample_rate, {r.processed}});
      Json report = {{"method", FilterMethodName(f.method())},
                     {"frames", r.frame_pattern_index.size()},
                     {"frame_pattern_index", r.frame_pattern_index}};
      Json starts = Json::array();
      for (const auto& e : timeline) starts.push_back(e.start_frame);
      report["start_frames"] = starts;
      report["sdr_db"] = r.sdr ? Json(*r.sdr) : Json(nullptr);
      report["sdr_unprocessed_db"] = r.sdr_unprocessed ? Json(*r.sdr_unprocessed) : Json(nullptr);
      if (!report_path.empty()) WriteJsonFile(report_path, report);
      std::cout << "wrote " << filter_out << "\n";
    } else if (*serve) {
      ServiceOptions opt;
      opt.model = MaybeModel(model_path);
      opt.stft = StftFromFlags(win, hop, window);
      opt.data_root = data_root;
      ServiceApi api(opt);
      HttpServer server(api);
      g_server = &server;
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      const int bound = server.Bind(host, port);
      std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
      server.Listen();
      g_server = nullptr;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
