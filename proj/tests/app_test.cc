#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "test_util.h"
#include "undf/checkpoint.h"
#include "undf/errors.h"
#include "undf/io.h"
#include "undf/pipeline.h"
#include "undf/sources.h"
#include "undf/wav.h"

namespace undf {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("undf_app_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<double> Sine(double freq, int rate, std::size_t n, double amp = 0.5) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = amp * std::sin(kTwoPi * freq * i / rate);
  return out;
}

TEST(Wav, Float32RoundTripIsExactForFloatValues) {
  WavData w{16000, {{0.25, -0.5, 0.125}, {1.0, 0.0, -1.0}}};
  const WavData back = ParseWav(EncodeWav(w));
  EXPECT_EQ(back.sample_rate, 16000);
  ASSERT_EQ(back.num_channels(), 2);
  EXPECT_EQ(back.channels, w.channels);
}

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  const auto sig = Sine(440.0, 16000, 800);
  const WavData back = ParseWav(EncodeWav(WavData{16000, {sig}}, WavFormat::kPcm16));
  ASSERT_EQ(back.num_samples(), sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) EXPECT_NEAR(back.channels[0][i], sig[i], 0.5 / 32768.0 + 1e-15);
}

TEST(Wav, Pcm16ClipsOutOfRange) {
  const WavData back = ParseWav(EncodeWav(WavData{8000, {{2.0, -2.0}}}, WavFormat::kPcm16));
  EXPECT_DOUBLE_EQ(back.channels[0][0], 32767.0 / 32768.0);
  EXPECT_DOUBLE_EQ(back.channels[0][1], -1.0);
}

TEST(Wav, ParsesHandBuilt24BitFile) {
  // One channel, two samples: +0.5 and -0.25 full scale.
  std::vector<std::uint8_t> b = {'R', 'I', 'F', 'F', 0, 0, 0, 0, 'W', 'A', 'V', 'E', 'f', 'm', 't', ' ',
                                 16, 0, 0, 0, 1, 0, 1, 0, 0x80, 0xBB, 0, 0, 0, 0, 0, 0, 3, 0, 24, 0,
                                 'L', 'I', 'S', 'T', 2, 0, 0, 0, 'x', 'y',
                                 'd', 'a', 't', 'a', 6, 0, 0, 0, 0x00, 0x00, 0x40, 0x00, 0x00, 0xE0};
  const WavData w = ParseWav(b);
  EXPECT_EQ(w.sample_rate, 48000);
  ASSERT_EQ(w.num_samples(), 2u);
  EXPECT_DOUBLE_EQ(w.channels[0][0], 0.5);
  EXPECT_DOUBLE_EQ(w.channels[0][1], -0.25);
}

TEST(Wav, RejectsGarbage) {
  const std::vector<std::uint8_t> junk = {'n', 'o', 'p', 'e'};
  EXPECT_THROW(ParseWav(junk), IngestionError);
  std::vector<std::uint8_t> truncated = EncodeWav(WavData{16000, {{0.1, 0.2}}});
  truncated.resize(30);
  EXPECT_THROW(ParseWav(truncated), IngestionError);
  EXPECT_THROW(ReadWav("/nonexistent/file.wav"), IngestionError);
}

TEST(Resample, IdentityWhenRatesMatch) {
  const auto sig = Sine(300.0, 16000, 100);
  EXPECT_EQ(Resample(sig, 16000, 16000), sig);
}

TEST(Resample, ToneSurvivesDownsampling) {
  const int from = 44100;
  const int to = 16000;
  const auto sig = Sine(1000.0, from, from / 2);
  const auto out = Resample(sig, from, to);
  EXPECT_EQ(out.size(), static_cast<std::size_t>(std::ceil(sig.size() * 16000.0 / 44100.0)));
  double max_err = 0.0;
  // Skip the filter's reach at both ends.
  for (std::size_t m = 200; m + 200 < out.size(); ++m) {
    max_err = std::max(max_err, std::abs(out[m] - 0.5 * std::sin(kTwoPi * 1000.0 * m / to)));
  }
  EXPECT_LT(max_err, 1e-3);
}

TEST(Resample, RemovesContentAboveTheNewNyquist) {
  const auto sig = Sine(12000.0, 44100, 22050);
  const auto out = Resample(sig, 44100, 16000);
  double energy = 0.0;
  for (std::size_t m = 200; m + 200 < out.size(); ++m) energy += out[m] * out[m];
  EXPECT_LT(std::sqrt(energy / (out.size() - 400)), 1e-3);
}

TEST(Base64, KnownVectors) {
  auto enc = [](const std::string& s) {
    return Base64Encode(std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  const auto dec = Base64Decode("Zm9vYmE=");
  EXPECT_EQ(std::string(dec.begin(), dec.end()), "fooba");
  EXPECT_THROW(Base64Decode("Zm9v!"), ValidationError);
}

TEST(Base64, RoundTripsRandomBytes) {
  std::mt19937_64 rng(3);
  for (int len = 0; len < 40; ++len) {
    std::vector<std::uint8_t> bytes(len);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(Base64Decode(Base64Encode(bytes)), bytes);
  }
}

TEST(Io, PatternVectorValidation) {
  const Json good = {{"l", 4}, {"gains", {1.0, 0.5, 0.1, 0.5}}};
  EXPECT_EQ(PatternVectorFromJson(good).gains, (std::vector<double>{1.0, 0.5, 0.1, 0.5}));
  EXPECT_THROW(PatternVectorFromJson({{"l", 5}, {"gains", {1.0, 0.5, 0.1, 0.5}}}), ValidationError);
  EXPECT_THROW(PatternVectorFromJson(good, 72), ValidationError);
  EXPECT_THROW(PatternVectorFromJson({{"gains", {1.0, 1.5, 0.1, 0.5}}}), ValidationError);
  EXPECT_THROW(PatternVectorFromJson({{"gains", "nope"}}), ValidationError);
}

TEST(Io, AnalyticPatternRoundTrip) {
  const Json spec = {{"components",
                      {{{"kind", "dma-simplified"}, {"mu", 0.5}, {"theta_s_deg", 90.0}, {"order_j", 2}},
                       {{"kind", "rect"}, {"theta_start_deg", 350.0}, {"theta_end_deg", 10.0}},
                       {{"kind", "dma-general"}, {"coeffs", {0.2, 0.3, 0.5}}, {"theta_s", 1.0}}}},
                     {"floor_db", -25.0}};
  const AnalyticPattern p = AnalyticPatternFromJson(spec);
  const AnalyticPattern q = AnalyticPatternFromJson(AnalyticPatternToJson(p));
  EXPECT_EQ(q.floor_db(), -25.0);
  for (int i = 0; i < 100; ++i) {
    const double th = kTwoPi * i / 100.0;
    EXPECT_EQ(p.EvaluateFloored(th), q.EvaluateFloored(th));
  }
  EXPECT_THROW(ComponentFromJson({{"kind", "blob"}}), ValidationError);
  EXPECT_THROW(ComponentFromJson({{"kind", "dma-simplified"}, {"mu", 0.5}}), ValidationError);
}

TEST(Io, PatternCsvHasOneRowPerGain) {
  const std::string csv = PatternCsv(PatternVector{{1.0, 0.1, 0.0, 0.5}});
  EXPECT_EQ(csv.rfind("angle_deg,gain_linear,gain_db\n0,1,0\n90,0.10000000000000001,-20\n", 0), 0u);
  EXPECT_NE(csv.find("180,0,-inf"), std::string::npos);
}

TEST(Io, TimelineParsing) {
  const Json j = {{"timeline",
                   {{{"start_frame", 0}, {"gains", {1.0, 1.0, 1.0, 1.0}}},
                    {{"start_frame", 5}, {"pattern", {{"kind", "dma-simplified"}, {"mu", 0.5}, {"theta_s", 0.0}}}}}}};
  const auto t = TimelineFromJson(j, 4);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].start_frame, 5);
  EXPECT_THROW(TimelineFromJson(Json::parse(R"([{"start_frame": 0, "gains": [1,1,1,1]},
                                               {"start_frame": 0, "gains": [1,1,1,1]}])")),
               ValidationError);
  EXPECT_THROW(TimelineFromJson(Json::parse(R"([{"start_frame": 2, "gains": [1,1,1,1]}])")), ValidationError);
  EXPECT_THROW(TimelineFromJson(Json::parse(R"([{"start_frame": 0, "gains": [1,1,1]}])"), 4), ValidationError);
}

TEST(Io, ConfigRoundTrips) {
  ArchConfig a;
  a.arch = Arch::kPvJnf;
  a.bilstm_hidden = 8;
  a.feature_width = 16;
  a.unilstm_hidden = 4;
  a.mask_bound = 2.0;
  EXPECT_EQ(ArchConfigFromJson(ArchConfigToJson(a)), a);
  StftConfig s{16000, 128, 64, "hann"};
  EXPECT_EQ(StftConfigFromJson(StftConfigToJson(s)), s);
  TrainConfig t;
  t.max_steps = 12;
  t.batch_size = 3;
  const TrainConfig t2 = TrainConfigFromJson(TrainConfigToJson(t));
  EXPECT_EQ(t2.max_steps, t.max_steps);
  EXPECT_EQ(t2.batch_size, 3);
  RecipeConfig r;
  r.recipe = Recipe::kBplus;
  r.rng_seed = 9;
  EXPECT_EQ(RecipeConfigFromJson(RecipeConfigToJson(r)).recipe, Recipe::kBplus);
  EXPECT_THROW(ArchConfigFromJson({{"arch", "transformer"}}), ValidationError);
}

TEST(Io, SceneFromJsonWithSyntheticAndWavSources) {
  TempDir dir;
  const auto tone = Sine(500.0, 8000, 8000);
  WriteWav(dir.path() / "tone.wav", WavData{8000, {tone}});
  const Json j = {{"duration_s", 0.5},
                  {"seed", 4},
                  {"sources",
                   {{{"doa_deg", 30.0}, {"synthetic", {{"kind", "harmonic"}, {"seed", 2}, {"f0", 150.0}}}},
                    {{"doa_deg", 200.0}, {"distance_m", 2.0}, {"wav_path", "tone.wav"}}}}};
  const SceneSpec scene = SceneFromJson(j, dir.path());
  ASSERT_EQ(scene.sources.size(), 2u);
  EXPECT_NEAR(scene.sources[0].doa, DegToRad(30.0), 1e-15);
  EXPECT_EQ(scene.sources[1].distance, 2.0);
  EXPECT_EQ(scene.sources[0].signal,
            GenerateSynthetic({SyntheticKind::kHarmonic, 2, 150.0}, 8000, 16000));
  EXPECT_EQ(scene.sources[1].signal.size(), 16000u);  // resampled from 8 kHz
  EXPECT_THROW(SceneFromJson({{"sources", {{{"doa_deg", 0.0}}}}}), ValidationError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ArchConfig arch = testing::TinyArch(Arch::kFilmJnf);
  arch.mask_bound = 3.0;
  Checkpoint c;
  c.arch = arch;
  c.stft = testing::TinyStft();
  c.params = ModelParams::Init(arch, 11);
  c.metadata = {{"steps", 5}};
  const auto bytes = EncodeCheckpoint(c);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "UNDFCKPT");
  const Checkpoint d = DecodeCheckpoint(bytes);
  EXPECT_EQ(d.arch, c.arch);
  EXPECT_EQ(d.stft, c.stft);
  EXPECT_EQ(d.metadata, c.metadata);
  ASSERT_EQ(d.params.tensors().size(), c.params.tensors().size());
  for (std::size_t i = 0; i < c.params.tensors().size(); ++i) {
    EXPECT_EQ(d.params.tensors()[i].name, c.params.tensors()[i].name);
    EXPECT_TRUE(d.params.tensors()[i].value == c.params.tensors()[i].value);
  }
  EXPECT_EQ(EncodeCheckpoint(d), bytes);
}

TEST(Checkpoint, DataIsLittleEndianFloat64RowMajor) {
  ArchConfig arch = testing::TinyArch(Arch::kBackbone);
  Checkpoint c{arch, testing::TinyStft(), ModelParams::Init(arch, 1), Json::object()};
  const auto bytes = EncodeCheckpoint(c);
  std::uint64_t hlen = 0;
  for (int i = 7; i >= 0; --i) hlen = (hlen << 8) | bytes[12 + i];
  const Json header = Json::parse(bytes.begin() + 20, bytes.begin() + 20 + hlen);
  const auto& first = header["tensors"][0];
  const auto& t0 = c.params.tensors().front().value;
  EXPECT_EQ(first["shape"][0].get<Eigen::Index>(), t0.rows());
  // Second element in row-major order is (0, 1).
  const std::size_t at = 20 + hlen + first["offset"].get<std::size_t>() + 8;
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = (u << 8) | bytes[at + i];
  EXPECT_EQ(std::bit_cast<double>(u), t0(0, 1));
}

TEST(Checkpoint, RejectsCorruptInput) {
  ArchConfig arch = testing::TinyArch(Arch::kPvJnf);
  Checkpoint c{arch, testing::TinyStft(), ModelParams::Init(arch, 1), Json::object()};
  auto bytes = EncodeCheckpoint(c);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(DecodeCheckpoint(bad), ValidationError);
  bytes.resize(bytes.size() - 8);
  EXPECT_THROW(DecodeCheckpoint(bytes), ValidationError);
  EXPECT_THROW(LoadCheckpoint("/nonexistent.ckpt"), NotFoundError);
}

TEST(Sources, IngestsSortedWavAndSyntheticEntries) {
  TempDir dir;
  for (int i = 0; i < 10; ++i) {
    WriteWav(dir.path() / ("clip_" + std::to_string(9 - i) + ".wav"), WavData{16000, {Sine(200.0 + i, 16000, 400)}});
  }
  const auto entries = IngestSources(dir.path());
  ASSERT_EQ(entries.size(), 10u);
  for (std::size_t i = 0; i + 1 < entries.size(); ++i) EXPECT_LT(entries[i].name, entries[i + 1].name);
  EXPECT_FALSE(entries[0].resampled);
}

TEST(Sources, ResamplesAndFlags) {
  TempDir dir;
  WriteWav(dir.path() / "hi.wav", WavData{44100, {Sine(440.0, 44100, 44100)}});
  const auto entries = IngestSources(dir.path());
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_TRUE(entries[0].resampled);
  EXPECT_EQ(entries[0].original_rate, 44100);
  EXPECT_EQ(entries[0].signal.size(), 16000u);
}

TEST(Sources, SyntheticSpecIsReproducible) {
  TempDir dir;
  WriteJsonFile(dir.path() / "ssn.json", {{"kind", "speech-shaped-noise"}, {"seed", 12}, {"duration_s", 0.25}});
  const auto a = IngestSources(dir.path());
  const auto b = IngestSources(dir.path());
  ASSERT_EQ(a.size(), 1u);
  EXPECT_TRUE(a[0].synthetic);
  EXPECT_EQ(a[0].signal, b[0].signal);
  EXPECT_EQ(a[0].signal, GenerateSynthetic({SyntheticKind::kSpeechShapedNoise, 12, 0.0}, 4000, 16000));
}

TEST(Sources, ErrorsListEveryOffender) {
  TempDir dir;
  WriteWav(dir.path() / "good.wav", WavData{16000, {Sine(100.0, 16000, 100)}});
  WriteWav(dir.path() / "stereo.wav", WavData{16000, {Sine(100.0, 16000, 100), Sine(100.0, 16000, 100)}});
  std::ofstream(dir.path() / "broken.wav") << "not audio";
  try {
    IngestSources(dir.path());
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("stereo.wav"), std::string::npos);
    EXPECT_NE(msg.find("broken.wav"), std::string::npos);
    EXPECT_EQ(msg.find("good.wav"), std::string::npos);
  }
  TempDir empty;
  EXPECT_THROW(IngestSources(empty.path()), IngestionError);
  EXPECT_THROW(IngestSources(empty.path() / "missing"), IngestionError);
}

TEST(Pipeline, ExperimentConfigConsistency) {
  ExperimentConfig c = ExperimentConfigFromJson({{"stft", {{"win_len", 128}, {"hop", 64}}}});
  EXPECT_EQ(c.arch.bins, 65);
  EXPECT_THROW(ExperimentConfigFromJson({{"stft", {{"win_len", 128}, {"hop", 64}}}, {"arch", {{"bins", 257}}}}),
               ValidationError);
  EXPECT_THROW(ExperimentConfigFromJson({{"arch", {{"mics", 3}}}}), ValidationError);
  const ExperimentConfig d = ExperimentConfigFromJson(ExperimentConfigToJson(c));
  EXPECT_EQ(d.arch, c.arch);
  EXPECT_EQ(d.stft, c.stft);
}

TEST(Pipeline, RecipeAExportsSixtyCsvFiles) {
  TempDir dir;
  RecipeConfig cfg;
  cfg.recipe = Recipe::kA;
  const auto paths = ExportPatterns(RecipePatterns(cfg), 72, ExportFormat::kCsv, dir.path());
  EXPECT_EQ(paths.size(), 60u);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) files += e.path().extension() == ".csv";
  EXPECT_EQ(files, 60);
}

TEST(Pipeline, SimulateWritesReadableArtifacts) {
  TempDir dir;
  SceneSpec spec;
  spec.duration = 0.1;
  spec.sources.push_back({DegToRad(45.0), 1.5, GenerateSynthetic({}, 1600, 16000)});
  spec.sources.push_back({DegToRad(180.0), 1.5, GenerateSynthetic({SyntheticKind::kWhiteNoise, 3, 0}, 1600, 16000)});
  const RenderedScene r = SimulateToDirectory(spec, dir.path());
  const WavData mics = ReadWav(dir.path() / "mics.wav");
  EXPECT_EQ(mics.num_channels(), 4);
  EXPECT_EQ(mics.num_samples(), 1600u);
  for (std::size_t i = 0; i < 1600; ++i) {
    EXPECT_EQ(mics.channels[2][i], static_cast<double>(static_cast<float>(r.mic_signals[2][i])));
  }
  EXPECT_TRUE(fs::exists(dir.path() / "source_01.wav"));
  const Json desc = ReadJsonFile(dir.path() / "scene.json");
  EXPECT_EQ(desc["sources"].size(), 2u);
  EXPECT_NEAR(desc["sources"][1]["doa_deg"].get<double>(), 180.0, 1e-12);
}

TEST(Pipeline, SampledScenesAreDeterministic) {
  SceneSamplingConfig cfg;
  cfg.duration = 0.1;
  const SceneSet a = SampleScenes(Split::kTrain, 3, 5, cfg);
  const SceneSet b = SampleScenes(Split::kTrain, 3, 5, cfg);
  const SceneSet c = SampleScenes(Split::kTest, 3, 5, cfg);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.scenes[i].mic_signals, b.scenes[i].mic_signals);
    EXPECT_EQ(a.scenes[i].doas, b.scenes[i].doas);
  }
  EXPECT_NE(a.scenes[0].doas, c.scenes[0].doas);
}

StftConfig SmallStft() { return {16000, 128, 64, "sqrt-hann"}; }

TEST(Pipeline, OmniOracleTimelineReturnsTheReference) {
  SceneSamplingConfig cfg;
  cfg.duration = 0.2;
  const RenderedScene scene = SampleScenes(Split::kTest, 1, 2, cfg).scenes.front();
  const Filter oracle = Filter::Oracle(SmallStft());
  const auto r = ProcessTimeline(scene, {{0, PatternVector{std::vector<double>(72, 1.0)}}}, oracle);
  EXPECT_LT(testing::RelL2(r.processed, scene.reference()), 1e-9);
  ASSERT_TRUE(r.sdr.has_value());
  EXPECT_EQ(r.frame_pattern_index, std::vector<int>(r.frame_pattern_index.size(), 0));
}

TEST(Pipeline, TimelineSwitchKeepsEarlierFramesBitIdentical) {
  SceneSamplingConfig cfg;
  cfg.duration = 0.3;
  const RenderedScene scene = SampleScenes(Split::kTest, 1, 8, cfg).scenes.front();
  const Filter oracle = Filter::Oracle(SmallStft());
  const GainPattern first = AnalyticPattern::Cardioid(0.0);
  const GainPattern second = AnalyticPattern::Cardioid(kPi);
  const auto single = ProcessTimeline(scene, {{0, first}}, oracle);
  const int t0 = 20;
  const auto switched = ProcessTimeline(scene, {{0, first}, {t0, second}}, oracle);
  for (int t = 0; t < t0; ++t) {
    EXPECT_TRUE((single.processed_db.row(t).array() == switched.processed_db.row(t).array()).all());
  }
  const std::size_t clean = static_cast<std::size_t>(t0 * 64 - SmallStft().pad());
  for (std::size_t i = 0; i < clean; ++i) ASSERT_EQ(single.processed[i], switched.processed[i]) << i;
  EXPECT_NE(single.processed, switched.processed);
  EXPECT_EQ(switched.frame_pattern_index[t0 - 1], 0);
  EXPECT_EQ(switched.frame_pattern_index[t0], 1);
}

TEST(Pipeline, OracleNeedsComponents) {
  RenderedScene scene;
  scene.mic_signals = {std::vector<double>(1000, 0.0)};
  scene.sample_rate = 16000;
  EXPECT_THROW(ProcessTimeline(scene, {{0, AnalyticPattern::Omni()}}, Filter::Oracle(SmallStft())),
               ValidationError);
}

TEST(Pipeline, EqualSegmentsSplitsFrames) {
  const std::vector<GainPattern> p(3, AnalyticPattern::Omni());
  const auto t = EqualSegments(p, 30);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1].start_frame, 10);
  EXPECT_EQ(t[2].start_frame, 20);
}

TEST(Pipeline, EvaluateOracleReportsPerDirectionRatios) {
  EvalOptions opt;
  opt.num_scenes = 2;
  opt.scenes.duration = 0.2;
  opt.patterns = {AnalyticPattern::Cardioid(0.0)};
  const EvalReport rep = Evaluate(Filter::Oracle(SmallStft()), opt);
  EXPECT_EQ(rep.sdr.size(), 2u);
  EXPECT_EQ(rep.directions.size(), 4u);
  const Json j = rep.ToJson();
  EXPECT_EQ(j["method"], "parametric-oracle");
  EXPECT_TRUE(j.contains("directions"));
  EXPECT_EQ(rep.DirectionsCsv().rfind("pattern,theta_deg,xi,", 0), 0u);
}

TEST(Pipeline, NeuralFilterRunsFromCheckpoint) {
  ExperimentConfig cfg = ExperimentConfigFromJson(
      {{"stft", {{"win_len", 32}, {"hop", 16}}},
       {"arch", {{"arch", "film-jnf"}, {"bilstm_hidden", 3}, {"feature_width", 6}, {"unilstm_hidden", 2},
                 {"pattern_length", 8}}},
       {"recipe", {{"recipe", "b"}, {"patterns_per_setup", 2}, {"rng_seed", 1}}},
       {"train", {{"batch_size", 2}, {"max_steps", 2}}},
       {"scenes", {{"duration_s", 0.05}}},
       {"train_scenes", 2}});
  const TrainOutcome a = TrainExperiment(cfg, false);
  const TrainOutcome b = TrainExperiment(cfg, false);
  EXPECT_EQ(a.result.step_loss, b.result.step_loss);
  EXPECT_EQ(a.result.steps, 2);
  const auto model = std::make_shared<const Checkpoint>(a.checkpoint);
  const Filter neural = Filter::Neural(model);
  SceneSamplingConfig sc;
  sc.duration = 0.05;
  const RenderedScene scene = SampleScenes(Split::kTest, 1, 1, sc).scenes.front();
  const auto r = ProcessTimeline(scene, {{0, AnalyticPattern::Omni()}, {3, AnalyticPattern::Cardioid(1.0)}}, neural);
  EXPECT_EQ(r.processed.size(), scene.reference().size());
  EXPECT_EQ(r.segment_patterns[0].length(), 8);
}

}  // namespace
}  // namespace undf
