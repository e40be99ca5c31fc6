#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace undf {

using ComplexGrid = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Real-input FFT helpers backed by FFTW. Safe to call concurrently.
// RealFft writes n/2 + 1 bins; InverseRealFft is normalized (1/n).
void RealFft(std::span<const double> input, std::span<std::complex<double>> output);
void InverseRealFft(std::span<const std::complex<double>> input, std::span<double> output);

struct StftConfig {
  int sample_rate = 16000;
  int win_len = 512;
  int hop = 256;
  // "sqrt-hann": sqrt-Hann analysis and synthesis.
  // "hann": Hann analysis, rectangular synthesis.
  std::string window = "sqrt-hann";

  int num_bins() const { return win_len / 2 + 1; }
  // Leading zero padding so the first samples are covered by full overlap.
  int pad() const { return win_len - hop; }
  int NumFrames(std::size_t num_samples) const;
  void Validate() const;

  bool operator==(const StftConfig&) const = default;
};

std::vector<double> AnalysisWindow(const StftConfig& cfg);
std::vector<double> SynthesisWindow(const StftConfig& cfg);

// One-sided spectrogram, frames x bins, row-major.
struct Spectrogram {
  ComplexGrid data;
  StftConfig config;
  std::size_t num_samples = 0;

  int frames() const { return static_cast<int>(data.rows()); }
  int bins() const { return static_cast<int>(data.cols()); }

  static Spectrogram Zeros(const StftConfig& cfg, std::size_t num_samples);
  void CheckCompatible(const Spectrogram& other) const;
};

Spectrogram Stft(std::span<const double> signal, const StftConfig& cfg);
std::vector<double> Istft(const Spectrogram& spec);

// Adjoint of Istft: maps dLoss/d(output samples) onto the spectrogram,
// returned as dLoss/dRe + i dLoss/dIm per bin.
Spectrogram IstftBackward(const StftConfig& cfg, std::size_t num_samples,
                          std::span<const double> grad_signal);

// [B, T, F, 2Q]; channel 2q is Re(mic q), 2q+1 is Im(mic q).
struct FeatureBlock {
  int batch = 0;
  int frames = 0;
  int bins = 0;
  int channels = 0;
  std::vector<double> data;

  double& at(int b, int t, int f, int c) {
    return data[((static_cast<std::size_t>(b) * frames + t) * bins + f) * channels + c];
  }
  double at(int b, int t, int f, int c) const {
    return data[((static_cast<std::size_t>(b) * frames + t) * bins + f) * channels + c];
  }
  int mics() const { return channels / 2; }
  void Validate() const;
};

FeatureBlock StackFeatures(std::span<const Spectrogram> specs);
// Inverse of StackFeatures for batch item `b`; needs the config of the originals.
std::vector<Spectrogram> UnstackFeatures(const FeatureBlock& block, int b, const StftConfig& cfg,
                                         std::size_t num_samples);
// Concatenates single-item blocks along the batch axis.
FeatureBlock ConcatBatch(std::span<const FeatureBlock> items);

}  // namespace undf
