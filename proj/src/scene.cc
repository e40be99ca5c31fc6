#include "undf/scene.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "undf/errors.h"

namespace undf {

double ArrayGeometry::radius() const {
  double r = 0.0;
  for (const auto& p : mic_positions) r = std::max(r, std::hypot(p[0], p[1], p[2]));
  return r;
}

void ArrayGeometry::Validate() const {
  if (mic_positions.size() < 2) throw ValidationError("array: at least two microphones required");
  if (reference_index < 0 || reference_index >= num_mics()) {
    throw ValidationError("array: reference_index out of range");
  }
  for (std::size_t i = 0; i < mic_positions.size(); ++i) {
    for (std::size_t j = i + 1; j < mic_positions.size(); ++j) {
      const auto& a = mic_positions[i];
      const auto& b = mic_positions[j];
      if (a == b) {
        throw ValidationError("array: microphones " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide");
      }
    }
  }
}

ArrayGeometry BuildDefaultArray() {
  constexpr double kRadius = 0.015;
  ArrayGeometry g;
  g.mic_positions.push_back({0.0, 0.0, 0.0});
  for (int i = 0; i < 3; ++i) {
    const double phi = DegToRad(120.0 * i);
    g.mic_positions.push_back({kRadius * std::cos(phi), kRadius * std::sin(phi), 0.0});
  }
  g.reference_index = 0;
  return g;
}

std::vector<PathResponse> DirectPath(const ArrayGeometry& geom, double doa, double distance) {
  geom.Validate();
  if (!(distance > geom.radius())) {
    throw ValidationError("direct_path: source at " + std::to_string(distance) +
                          " m lies inside the array (radius " + std::to_string(geom.radius()) +
                          " m)");
  }
  const Point3 src{distance * std::cos(doa), distance * std::sin(doa), 0.0};
  std::vector<PathResponse> out;
  out.reserve(geom.mic_positions.size());
  for (const auto& mic : geom.mic_positions) {
    const double d = std::hypot(src[0] - mic[0], src[1] - mic[1], src[2] - mic[2]);
    out.push_back({d / kSpeedOfSound, 1.0 / (4.0 * kPi * d)});
  }
  return out;
}

std::vector<double> DelayAndScale(const std::vector<double>& signal, double delay_samples,
                                  double gain) {
  if (!(delay_samples >= 0.0)) throw ValidationError("fractional delay must be non-negative");
  const long whole = static_cast<long>(std::floor(delay_samples));
  const double frac = delay_samples - whole;
  constexpr int kHalf = kFractionalDelayTaps / 2;
  // taps[j + kHalf - 1] = h(j - frac), j in [-(kHalf-1), kHalf]
  std::array<double, kFractionalDelayTaps> taps{};
  for (int j = -(kHalf - 1); j <= kHalf; ++j) {
    const double u = j - frac;
    const double sinc = (u == 0.0) ? 1.0 : std::sin(kPi * u) / (kPi * u);
    const double window = (std::abs(u) < kHalf) ? 0.5 * (1.0 + std::cos(kPi * u / kHalf)) : 0.0;
    taps[j + kHalf - 1] = gain * sinc * window;
  }
  const long n = static_cast<long>(signal.size());
  std::vector<double> out(signal.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = -(kHalf - 1); j <= kHalf; ++j) {
      const long m = i - whole - j;
      if (m >= 0 && m < n) acc += taps[j + kHalf - 1] * signal[m];
    }
    out[i] = acc;
  }
  return out;
}

std::size_t SceneSpec::num_samples() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::vector<double> SceneSpec::doas() const {
  std::vector<double> out;
  for (const auto& s : sources) out.push_back(s.doa);
  return out;
}

std::vector<double> RenderedScene::ReferenceSourceSum() const {
  std::vector<double> sum(reference().size(), 0.0);
  for (const auto& c : ref_components) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c[i];
  }
  return sum;
}

RenderedScene RenderMics(const SceneSpec& scene, const ArrayGeometry& geom) {
  geom.Validate();
  if (!(scene.duration > 0.0)) throw ValidationError("scene: duration must be positive");
  const bool has_noise = scene.noise_snr_db.has_value() && std::isfinite(*scene.noise_snr_db);
  if (scene.sources.empty() && !has_noise) {
    throw ValidationError("scene: no sources and no sensor noise, nothing to render");
  }
  const std::size_t len = scene.num_samples();
  const int q_count = geom.num_mics();

  RenderedScene out;
  out.sample_rate = scene.sample_rate;
  out.reference_index = geom.reference_index;
  out.doas = scene.doas();
  out.mic_signals.assign(q_count, std::vector<double>(len, 0.0));

  for (const auto& src : scene.sources) {
    for (double v : src.signal) {
      if (!std::isfinite(v)) throw ValidationError("scene: non-finite source sample");
    }
    std::vector<double> sig(len, 0.0);
    std::copy_n(src.signal.begin(), std::min(len, src.signal.size()), sig.begin());
    const auto paths = DirectPath(geom, src.doa, src.distance);
    for (int q = 0; q < q_count; ++q) {
      auto comp = DelayAndScale(sig, paths[q].delay * scene.sample_rate, paths[q].gain);
      auto& mic = out.mic_signals[q];
      for (std::size_t i = 0; i < len; ++i) mic[i] += comp[i];
      if (q == geom.reference_index) out.ref_components.push_back(std::move(comp));
    }
  }

  if (has_noise) {
    const auto& ref = out.mic_signals[geom.reference_index];
    const double power =
        len ? std::inner_product(ref.begin(), ref.end(), ref.begin(), 0.0) / len : 0.0;
    const double noise_power = (power > 0.0 ? power : 1.0) * std::pow(10.0, -*scene.noise_snr_db / 10.0);
    std::mt19937_64 rng(scene.rng_seed ^ 0x5eed5eedULL);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power));
    for (auto& mic : out.mic_signals) {
      for (double& v : mic) v += gauss(rng);
    }
  }
  return out;
}

Eigen::MatrixXd TargetGains(const std::vector<GainPattern>& patterns,
                            const std::vector<double>& doas, int frames) {
  if (patterns.size() != 1 && patterns.size() != static_cast<std::size_t>(frames)) {
    throw ValidationError("target: pattern sequence length must be 1 or T=" +
                          std::to_string(frames) + ", got " + std::to_string(patterns.size()));
  }
  Eigen::MatrixXd gains(frames, static_cast<Eigen::Index>(doas.size()));
  for (int t = 0; t < frames; ++t) {
    const auto& p = patterns.size() == 1 ? patterns.front() : patterns[t];
    for (std::size_t n = 0; n < doas.size(); ++n) gains(t, n) = GainAt(p, doas[n]);
  }
  return gains;
}

std::vector<double> RenderTarget(const RenderedScene& scene,
                                 const std::vector<GainPattern>& patterns, const StftConfig& cfg) {
  const std::size_t len = scene.reference().size();
  const int frames = cfg.NumFrames(len);
  const auto gains = TargetGains(patterns, scene.doas, frames);
  Spectrogram z = Spectrogram::Zeros(cfg, len);
  for (std::size_t n = 0; n < scene.ref_components.size(); ++n) {
    const Spectrogram x = Stft(scene.ref_components[n], cfg);
    for (int t = 0; t < frames; ++t) z.data.row(t) += gains(t, n) * x.data.row(t);
  }
  return Istft(z);
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split '" + name + "' (expected train, val, test)");
}

std::vector<double> DoaGrid(Split split) {
  std::vector<double> grid;
  switch (split) {
    case Split::kTrain:
      for (int i = 0; i < 72; ++i) grid.push_back(DegToRad(5.0 * i));
      break;
    case Split::kVal:
      for (int i = 0; i < 72; ++i) grid.push_back(DegToRad(2.5 + 5.0 * i));
      break;
    case Split::kTest:
      for (int i = 0; i < 144; ++i) grid.push_back(DegToRad(1.25 + 2.5 * i));
      break;
  }
  return grid;
}

SyntheticKind ParseSyntheticKind(const std::string& name) {
  if (name == "speech-shaped-noise") return SyntheticKind::kSpeechShapedNoise;
  if (name == "harmonic") return SyntheticKind::kHarmonic;
  if (name == "white-noise") return SyntheticKind::kWhiteNoise;
  throw ValidationError("unknown synthetic source kind '" + name + "'");
}

std::string SyntheticKindName(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kSpeechShapedNoise:
      return "speech-shaped-noise";
    case SyntheticKind::kHarmonic:
      return "harmonic";
    case SyntheticKind::kWhiteNoise:
      return "white-noise";
  }
  return "?";
}

std::vector<double> GenerateSynthetic(const SyntheticSourceSpec& spec, std::size_t num_samples,
                                      int sample_rate) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> out(num_samples, 0.0);
  const double fs = sample_rate;

  switch (spec.kind) {
    case SyntheticKind::kWhiteNoise:
      for (double& v : out) v = gauss(rng);
      break;
    case SyntheticKind::kSpeechShapedNoise: {
      // Tilted noise under a syllable-rate on/off envelope.
      const double rate = 3.0 + 3.0 * uni(rng);
      const double phase = kTwoPi * uni(rng);
      const double a = 0.9;
      double lp = 0.0;
      for (std::size_t i = 0; i < num_samples; ++i) {
        const double w = gauss(rng);
        lp = a * lp + (1.0 - a) * w;
        const double env = 0.15 + std::max(0.0, std::sin(kTwoPi * rate * i / fs + phase));
        out[i] = env * (3.0 * lp + 0.35 * w);
      }
      break;
    }
    case SyntheticKind::kHarmonic: {
      const double f0 = spec.f0 > 0.0 ? spec.f0 : 110.0 + 290.0 * uni(rng);
      const double vib_rate = 4.0 + 2.0 * uni(rng);
      const int harmonics = std::max(1, static_cast<int>(0.45 * fs / f0));
      std::vector<double> phases(harmonics);
      for (double& p : phases) p = kTwoPi * uni(rng);
      double inst_phase = 0.0;
      for (std::size_t i = 0; i < num_samples; ++i) {
        const double f = f0 * (1.0 + 0.01 * std::sin(kTwoPi * vib_rate * i / fs));
        inst_phase += kTwoPi * f / fs;
        double acc = 0.0;
        for (int k = 1; k <= harmonics; ++k) acc += std::sin(k * inst_phase + phases[k - 1]) / k;
        out[i] = acc;
      }
      break;
    }
  }
  double energy = 0.0;
  for (double v : out) energy += v * v;
  if (energy > 0.0) {
    const double scale = 1.0 / std::sqrt(energy / static_cast<double>(num_samples));
    for (double& v : out) v *= scale;
  }
  return out;
}

SceneSpec SampleScene(Split split, std::mt19937_64& rng, const SceneSamplingConfig& cfg) {
  if (cfg.max_train_sources < 1 || cfg.test_sources < 1) {
    throw ValidationError("scene sampling: source counts must be >= 1");
  }
  SceneSpec scene;
  scene.duration = cfg.duration;
  scene.sample_rate = cfg.sample_rate;
  scene.noise_snr_db = cfg.noise_snr_db;
  scene.rng_seed = rng();

  int count = cfg.test_sources;
  if (split != Split::kTest) {
    std::uniform_int_distribution<int> n_dist(1, cfg.max_train_sources);
    count = n_dist(rng);
  }
  auto grid = DoaGrid(split);
  if (count > static_cast<int>(grid.size())) throw ValidationError("scene sampling: too many sources");
  // Partial Fisher-Yates: first `count` entries are a draw without replacement.
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, grid.size() - 1);
    std::swap(grid[i], grid[pick(rng)]);
  }
  const std::size_t len = scene.num_samples();
  std::bernoulli_distribution harmonic(0.25);
  for (int i = 0; i < count; ++i) {
    SyntheticSourceSpec syn;
    syn.kind = harmonic(rng) ? SyntheticKind::kHarmonic : SyntheticKind::kSpeechShapedNoise;
    syn.seed = rng();
    SourceSpec src;
    src.doa = grid[i];
    src.distance = cfg.distance;
    src.signal = GenerateSynthetic(syn, len, cfg.sample_rate);
    scene.sources.push_back(std::move(src));
  }
  return scene;
}

}  // namespace undf
