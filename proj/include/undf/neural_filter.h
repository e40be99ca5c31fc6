#pragma once

// Pattern-conditioned mask estimators built on a frequency-BiLSTM /
// time-UniLSTM backbone, with a hand-written backward pass.
//
// Layout per batch item: features [T, F, 2Q] -> BiLSTM across F for every
// frame -> conditioning -> UniLSTM across T for every bin -> linear head to
// (Re, Im) of a complex mask. Both recurrences only look at the current and
// past frames, so the mask at frame t never depends on later input.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "undf/pattern.h"
#include "undf/stft.h"

namespace undf {

enum class Arch {
  kPvJnf,     // pattern -> initial BiLSTM hidden state, per frame
  kFilmJnf,   // pattern -> (alpha, beta), y = alpha * x + beta after the BiLSTM
  kBackbone,  // no conditioning
};

Arch ParseArch(const std::string& name);
std::string ArchName(Arch arch);

struct ArchConfig {
  Arch arch = Arch::kFilmJnf;
  int mics = 4;
  int pattern_length = kDefaultPatternLength;
  int bins = 257;
  int bilstm_hidden = 256;  // per direction
  int unilstm_hidden = 128;
  int feature_width = 512;  // must equal 2 * bilstm_hidden
  std::optional<double> mask_bound;
  // false swaps each LSTM for a plain affine map (gradient-check fixture).
  bool recurrent = true;

  void Validate() const;
  bool operator==(const ArchConfig&) const = default;
};

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

// Ordered set of named parameter arrays. Backbone tensors always come first
// and are drawn first from the RNG, so equal seeds give equal backbones
// across architectures.
class ModelParams {
 public:
  static ModelParams Init(const ArchConfig& cfg, std::uint64_t seed);
  static ModelParams ZerosLike(const ModelParams& other);

  void Add(std::string name, Eigen::MatrixXd value);
  bool Has(const std::string& name) const;
  Eigen::MatrixXd& at(const std::string& name);
  const Eigen::MatrixXd& at(const std::string& name) const;

  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::size_t NumValues() const;
  bool AllFinite() const;
  // Checks names and shapes against the architecture.
  void CheckShapes(const ArchConfig& cfg) const;

 private:
  std::vector<NamedTensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

// Conditioning input [B, P, L], P = 1 (static) or P = T (one pattern per frame).
struct PatternBatch {
  int batch = 0;
  int frames = 0;
  int length = 0;
  std::vector<double> data;

  double at(int b, int p, int l) const {
    return data[(static_cast<std::size_t>(b) * frames + p) * length + l];
  }
  static PatternBatch Static(std::span<const PatternVector> per_item);
  static PatternBatch PerFrame(std::span<const std::vector<PatternVector>> per_item);
};

// y = alpha .* x + beta, alpha/beta broadcast over the columns of x.
Eigen::MatrixXd FilmModulate(const Eigen::MatrixXd& x, const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& beta);

// One [T x F] complex mask per batch item.
std::vector<ComplexGrid> Forward(const ModelParams& params, const ArchConfig& cfg,
                                 const FeatureBlock& features, const PatternBatch& patterns);

// Same as Forward but keeps the activations needed by Backward.
class ForwardPass {
 public:
  ForwardPass(const ModelParams& params, const ArchConfig& cfg, const FeatureBlock& features,
              const PatternBatch& patterns);
  ~ForwardPass();
  ForwardPass(ForwardPass&&) noexcept;
  ForwardPass& operator=(ForwardPass&&) noexcept;

  const std::vector<ComplexGrid>& masks() const;
  // grad_masks[b](t, f) = dL/dRe M + i dL/dIm M.
  ModelParams Backward(const std::vector<ComplexGrid>& grad_masks) const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Z_hat = M .* Y_ref
Spectrogram ApplyMask(const ComplexGrid& mask, const Spectrogram& reference);

// sum_b |z_b - zhat_b|_1 / (sum_b |z_b|_1 + epsilon)
double LossL1(std::span<const std::vector<double>> targets,
              std::span<const std::vector<double>> estimates, double epsilon);

struct TrainingExample {
  FeatureBlock features;                // batch = 1
  Spectrogram reference;                // Y at the reference mic
  std::vector<PatternVector> patterns;  // 1 (static) or T
  std::vector<double> target;           // z, time domain
};

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
};

double ComputeLoss(const ModelParams& params, const ArchConfig& cfg,
                   std::span<const TrainingExample* const> batch, double epsilon);
LossAndGrad ComputeLossAndGrad(const ModelParams& params, const ArchConfig& cfg,
                               std::span<const TrainingExample* const> batch, double epsilon);

// Runs the network on one example and returns its time-domain estimate.
std::vector<double> Enhance(const ModelParams& params, const ArchConfig& cfg,
                            const TrainingExample& example);

struct GradCheckResult {
  double max_rel_error = 0.0;
  // Norm-wise relative error ||a - n|| / (||a|| + ||n||) per tensor.
  std::map<std::string, double> per_tensor;
};

// Central differences on a random subset of every tensor.
GradCheckResult GradCheck(const ModelParams& params, const ArchConfig& cfg,
                          std::span<const TrainingExample* const> batch, double epsilon,
                          int entries_per_tensor = 12, double step = 1e-5,
                          std::uint64_t seed = 7);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 10;
  int epochs = 100;
  double epsilon = 1e-7;
  std::uint64_t rng_seed = 0;
  std::optional<int> max_steps;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void Validate() const;
};

// Adam on the L1 objective; one instance owns one model.
class Trainer {
 public:
  Trainer(ArchConfig arch, TrainConfig train, ModelParams params);

  // One update on `batch`; returns the pre-update loss.
  double Step(std::span<const TrainingExample* const> batch);

  const ModelParams& params() const { return params_; }
  int steps() const { return step_; }

 private:
  ArchConfig arch_;
  TrainConfig train_;
  ModelParams params_;
  ModelParams m_;
  ModelParams v_;
  int step_ = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean step loss per epoch
  std::vector<double> step_loss;
  int steps = 0;
};

using TrainProgress = std::function<void(int step, double loss)>;

// Shuffles `data` per epoch with the configured seed. Stops after
// max_steps when set; the last (possibly partial) epoch is still recorded.
TrainResult Train(const ArchConfig& arch, const TrainConfig& train,
                  const std::vector<TrainingExample>& data,
                  std::optional<ModelParams> initial = std::nullopt,
                  const TrainProgress& progress = {});

}  // namespace undf
