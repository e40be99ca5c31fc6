#include "undf/stft.h"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "undf/errors.h"
#include "undf/pattern.h"

namespace undf {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
class PlanCache {
 public:
  static PlanCache& Get() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan Forward(int n) { return Lookup(n, true); }
  fftw_plan Backward(int n) { return Lookup(n, false); }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan Lookup(int n, bool forward) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_pair(n, forward);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const int bins = n / 2 + 1;
    auto* real = fftw_alloc_real(n);
    auto* cplx = fftw_alloc_complex(bins);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = forward ? fftw_plan_dft_r2c_1d(n, real, cplx, flags)
                             : fftw_plan_dft_c2r_1d(n, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::pair<int, bool>, fftw_plan> plans_;
};

double OlaNorm(const std::vector<double>& wa, const std::vector<double>& ws, int hop, int index) {
  // sum_t wa[n - t*hop] * ws[n - t*hop] for a position far from the edges
  double s = 0.0;
  const int n = static_cast<int>(wa.size());
  for (int m = index % hop; m < n; m += hop) s += wa[m] * ws[m];
  return s;
}

}  // namespace

void RealFft(std::span<const double> input, std::span<std::complex<double>> output) {
  const int n = static_cast<int>(input.size());
  if (static_cast<int>(output.size()) != n / 2 + 1) throw ValidationError("RealFft: bad output size");
  // r2c does not modify the input for out-of-place transforms.
  fftw_execute_dft_r2c(PlanCache::Get().Forward(n), const_cast<double*>(input.data()),
                       reinterpret_cast<fftw_complex*>(output.data()));
}

void InverseRealFft(std::span<const std::complex<double>> input, std::span<double> output) {
  const int n = static_cast<int>(output.size());
  if (static_cast<int>(input.size()) != n / 2 + 1) {
    throw ValidationError("InverseRealFft: bad input size");
  }
  // c2r destroys its input
  std::vector<std::complex<double>> scratch(input.begin(), input.end());
  fftw_execute_dft_c2r(PlanCache::Get().Backward(n),
                       reinterpret_cast<fftw_complex*>(scratch.data()), output.data());
  const double scale = 1.0 / n;
  for (double& v : output) v *= scale;
}

int StftConfig::NumFrames(std::size_t num_samples) const {
  const std::size_t covered = num_samples + static_cast<std::size_t>(pad());
  return static_cast<int>((covered + hop - 1) / hop);
}

void StftConfig::Validate() const {
  if (sample_rate <= 0) throw ValidationError("stft: sample_rate must be positive");
  if (win_len < 2) throw ValidationError("stft: win_len must be >= 2");
  if (hop < 1 || hop > win_len) throw ValidationError("stft: hop must lie in [1, win_len]");
  if (window != "sqrt-hann" && window != "hann") {
    throw ValidationError("stft: unknown window '" + window + "'");
  }
  const auto wa = AnalysisWindow(*this);
  const auto ws = SynthesisWindow(*this);
  double lo = 1e300;
  double hi = 0.0;
  for (int i = 0; i < hop; ++i) {
    const double s = OlaNorm(wa, ws, hop, i);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (!(lo > 1e-6 * hi)) {
    throw ValidationError("stft: window/hop pair cannot reconstruct (overlap-add sum vanishes)");
  }
}

std::vector<double> AnalysisWindow(const StftConfig& cfg) {
  std::vector<double> w(cfg.win_len);
  for (int i = 0; i < cfg.win_len; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(kTwoPi * i / cfg.win_len);
    w[i] = cfg.window == "sqrt-hann" ? std::sqrt(hann) : hann;
  }
  return w;
}

std::vector<double> SynthesisWindow(const StftConfig& cfg) {
  if (cfg.window == "hann") return std::vector<double>(cfg.win_len, 1.0);
  return AnalysisWindow(cfg);
}

Spectrogram Spectrogram::Zeros(const StftConfig& cfg, std::size_t num_samples) {
  Spectrogram s;
  s.config = cfg;
  s.num_samples = num_samples;
  s.data = ComplexGrid::Zero(cfg.NumFrames(num_samples), cfg.num_bins());
  return s;
}

void Spectrogram::CheckCompatible(const Spectrogram& other) const {
  if (!(config == other.config) || num_samples != other.num_samples ||
      frames() != other.frames() || bins() != other.bins()) {
    throw ValidationError("spectrogram: operands have inconsistent configs or shapes");
  }
}

Spectrogram Stft(std::span<const double> signal, const StftConfig& cfg) {
  cfg.Validate();
  if (signal.size() < static_cast<std::size_t>(cfg.win_len)) {
    throw ValidationError("stft: signal shorter than win_len (" + std::to_string(signal.size()) +
                          " < " + std::to_string(cfg.win_len) + ")");
  }
  Spectrogram spec = Spectrogram::Zeros(cfg, signal.size());
  const auto window = AnalysisWindow(cfg);
  const int n = cfg.win_len;
  const long pad = cfg.pad();
  std::vector<double> frame(n);
  std::vector<std::complex<double>> bins(cfg.num_bins());
  for (int t = 0; t < spec.frames(); ++t) {
    const long start = static_cast<long>(t) * cfg.hop - pad;
    for (int m = 0; m < n; ++m) {
      const long idx = start + m;
      const double x = (idx >= 0 && idx < static_cast<long>(signal.size())) ? signal[idx] : 0.0;
      frame[m] = window[m] * x;
    }
    RealFft(frame, bins);
    for (int k = 0; k < cfg.num_bins(); ++k) spec.data(t, k) = bins[k];
  }
  return spec;
}

namespace {

// Overlap-add normalization over the padded timeline.
std::vector<double> OlaEnvelope(const StftConfig& cfg, int frames) {
  const auto wa = AnalysisWindow(cfg);
  const auto ws = SynthesisWindow(cfg);
  const std::size_t padded = static_cast<std::size_t>(frames - 1) * cfg.hop + cfg.win_len;
  std::vector<double> env(padded, 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int m = 0; m < cfg.win_len; ++m) env[static_cast<std::size_t>(t) * cfg.hop + m] += wa[m] * ws[m];
  }
  return env;
}

}  // namespace

std::vector<double> Istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.Validate();
  if (spec.frames() != cfg.NumFrames(spec.num_samples) || spec.bins() != cfg.num_bins()) {
    throw ValidationError("istft: spectrogram shape does not match its config");
  }
  const int n = cfg.win_len;
  const auto ws = SynthesisWindow(cfg);
  const auto env = OlaEnvelope(cfg, spec.frames());
  std::vector<double> padded(env.size(), 0.0);
  std::vector<std::complex<double>> bins(cfg.num_bins());
  std::vector<double> frame(n);
  for (int t = 0; t < spec.frames(); ++t) {
    for (int k = 0; k < cfg.num_bins(); ++k) bins[k] = spec.data(t, k);
    InverseRealFft(bins, frame);
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int m = 0; m < n; ++m) padded[start + m] += ws[m] * frame[m];
  }
  std::vector<double> out(spec.num_samples);
  const std::size_t pad = cfg.pad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = padded[i + pad] / env[i + pad];
  return out;
}

Spectrogram IstftBackward(const StftConfig& cfg, std::size_t num_samples,
                          std::span<const double> grad_signal) {
  cfg.Validate();
  if (grad_signal.size() != num_samples) throw ValidationError("istft backward: length mismatch");
  Spectrogram grad = Spectrogram::Zeros(cfg, num_samples);
  const int n = cfg.win_len;
  const auto ws = SynthesisWindow(cfg);
  const auto env = OlaEnvelope(cfg, grad.frames());
  std::vector<double> padded(env.size(), 0.0);
  const std::size_t pad = cfg.pad();
  for (std::size_t i = 0; i < num_samples; ++i) padded[i + pad] = grad_signal[i] / env[i + pad];

  std::vector<double> frame(n);
  std::vector<std::complex<double>> bins(cfg.num_bins());
  const int nyquist = (n % 2 == 0) ? n / 2 : -1;
  for (int t = 0; t < grad.frames(); ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int m = 0; m < n; ++m) frame[m] = ws[m] * padded[start + m];
    RealFft(frame, bins);
    // x[m] = (1/n)[X_0 + 2 sum_k Re(X_k e^{+i..}) + X_{n/2}(-1)^m]; the
    // adjoint is the forward transform scaled by c_k / n.
    for (int k = 0; k < cfg.num_bins(); ++k) {
      const double c = (k == 0 || k == nyquist) ? 1.0 : 2.0;
      std::complex<double> g = bins[k] * (c / n);
      // Imaginary parts of DC / Nyquist do not reach the output.
      if (k == 0 || k == nyquist) g = {g.real(), 0.0};
      grad.data(t, k) = g;
    }
  }
  return grad;
}

void FeatureBlock::Validate() const {
  if (batch < 1 || frames < 1 || bins < 1 || channels < 2 || channels % 2 != 0) {
    throw ValidationError("feature block: invalid dimensions");
  }
  if (data.size() != static_cast<std::size_t>(batch) * frames * bins * channels) {
    throw ValidationError("feature block: data size does not match dimensions");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw ValidationError("feature block: non-finite entry");
  }
}

FeatureBlock StackFeatures(std::span<const Spectrogram> specs) {
  if (specs.empty()) throw ValidationError("stack_features: need at least one microphone");
  for (const auto& s : specs) specs.front().CheckCompatible(s);
  FeatureBlock block;
  block.batch = 1;
  block.frames = specs.front().frames();
  block.bins = specs.front().bins();
  block.channels = 2 * static_cast<int>(specs.size());
  block.data.assign(static_cast<std::size_t>(block.frames) * block.bins * block.channels, 0.0);
  for (std::size_t q = 0; q < specs.size(); ++q) {
    for (int t = 0; t < block.frames; ++t) {
      for (int f = 0; f < block.bins; ++f) {
        const auto v = specs[q].data(t, f);
        block.at(0, t, f, 2 * static_cast<int>(q)) = v.real();
        block.at(0, t, f, 2 * static_cast<int>(q) + 1) = v.imag();
      }
    }
  }
  return block;
}

std::vector<Spectrogram> UnstackFeatures(const FeatureBlock& block, int b, const StftConfig& cfg,
                                         std::size_t num_samples) {
  if (b < 0 || b >= block.batch) throw ValidationError("unstack_features: batch index out of range");
  std::vector<Spectrogram> out;
  for (int q = 0; q < block.mics(); ++q) {
    Spectrogram s;
    s.config = cfg;
    s.num_samples = num_samples;
    s.data.resize(block.frames, block.bins);
    for (int t = 0; t < block.frames; ++t) {
      for (int f = 0; f < block.bins; ++f) {
        s.data(t, f) = {block.at(b, t, f, 2 * q), block.at(b, t, f, 2 * q + 1)};
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

FeatureBlock ConcatBatch(std::span<const FeatureBlock> items) {
  if (items.empty()) throw ValidationError("concat_batch: empty input");
  FeatureBlock out;
  out.frames = items.front().frames;
  out.bins = items.front().bins;
  out.channels = items.front().channels;
  for (const auto& it : items) {
    if (it.frames != out.frames || it.bins != out.bins || it.channels != out.channels) {
      throw ValidationError("concat_batch: shape mismatch between batch items");
    }
    out.batch += it.batch;
    out.data.insert(out.data.end(), it.data.begin(), it.data.end());
  }
  return out;
}

}  // namespace undf
