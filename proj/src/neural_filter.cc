#include "undf/neural_filter.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lstm.h"
#include "undf/errors.h"

namespace undf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using internal::LstmTrace;

Arch ParseArch(const std::string& name) {
  if (name == "pv-jnf") return Arch::kPvJnf;
  if (name == "film-jnf") return Arch::kFilmJnf;
  if (name == "backbone") return Arch::kBackbone;
  throw ValidationError("unknown architecture '" + name + "' (expected pv-jnf, film-jnf, backbone)");
}

std::string ArchName(Arch arch) {
  switch (arch) {
    case Arch::kPvJnf:
      return "pv-jnf";
    case Arch::kFilmJnf:
      return "film-jnf";
    case Arch::kBackbone:
      return "backbone";
  }
  return "?";
}

void ArchConfig::Validate() const {
  if (mics < 1 || pattern_length < 1 || bins < 1 || bilstm_hidden < 1 || unilstm_hidden < 1) {
    throw ValidationError("arch: all dimensions must be >= 1");
  }
  if (feature_width != 2 * bilstm_hidden) {
    throw ValidationError("arch: feature_width must equal 2 * bilstm_hidden");
  }
  if (mask_bound && !(*mask_bound > 0.0)) throw ValidationError("arch: mask_bound must be positive");
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

MatrixXd Uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  MatrixXd m(rows, cols);
  // column-major fill order is part of the seed contract
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

void AddRecurrent(ModelParams& p, const std::string& prefix, int in, int hidden, bool recurrent,
                  std::mt19937_64& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  if (recurrent) {
    p.Add(prefix + ".w_ih", Uniform(4 * hidden, in, k, rng));
    p.Add(prefix + ".w_hh", Uniform(4 * hidden, hidden, k, rng));
    p.Add(prefix + ".b", Uniform(4 * hidden, 1, k, rng));
  } else {
    const double kin = 1.0 / std::sqrt(static_cast<double>(in));
    p.Add(prefix + ".w_ih", Uniform(hidden, in, kin, rng));
    p.Add(prefix + ".b", Uniform(hidden, 1, kin, rng));
  }
}

}  // namespace

ModelParams ModelParams::Init(const ArchConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  const int c = 2 * cfg.mics;
  const int h = cfg.bilstm_hidden;
  const int w = cfg.feature_width;
  const int u = cfg.unilstm_hidden;
  const int l = cfg.pattern_length;
  AddRecurrent(p, "bilstm.fwd", c, h, cfg.recurrent, rng);
  AddRecurrent(p, "bilstm.bwd", c, h, cfg.recurrent, rng);
  AddRecurrent(p, "unilstm", w, u, cfg.recurrent, rng);
  const double ku = 1.0 / std::sqrt(static_cast<double>(u));
  p.Add("head.w", Uniform(2, u, ku, rng));
  p.Add("head.b", Uniform(2, 1, ku, rng));

  const double kl = 1.0 / std::sqrt(static_cast<double>(l));
  if (cfg.arch == Arch::kPvJnf) {
    p.Add("cond.w", Uniform(w, l, kl, rng));
    p.Add("cond.b", Uniform(w, 1, kl, rng));
  } else if (cfg.arch == Arch::kFilmJnf) {
    p.Add("film.alpha.w", Uniform(w, l, kl, rng));
    p.Add("film.alpha.b", MatrixXd::Ones(w, 1) + Uniform(w, 1, kl, rng));
    p.Add("film.beta.w", Uniform(w, l, kl, rng));
    p.Add("film.beta.b", Uniform(w, 1, kl, rng));
  }
  return p;
}

ModelParams ModelParams::ZerosLike(const ModelParams& other) {
  ModelParams p;
  for (const auto& t : other.tensors_) p.Add(t.name, MatrixXd::Zero(t.value.rows(), t.value.cols()));
  return p;
}

void ModelParams::Add(std::string name, MatrixXd value) {
  if (index_.count(name)) throw ValidationError("params: duplicate tensor '" + name + "'");
  index_[name] = tensors_.size();
  tensors_.push_back({std::move(name), std::move(value)});
}

bool ModelParams::Has(const std::string& name) const { return index_.count(name) > 0; }

MatrixXd& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw NotFoundError("params: no tensor named '" + name + "'");
  return tensors_[it->second].value;
}

const MatrixXd& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw NotFoundError("params: no tensor named '" + name + "'");
  return tensors_[it->second].value;
}

std::size_t ModelParams::NumValues() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

bool ModelParams::AllFinite() const {
  return std::all_of(tensors_.begin(), tensors_.end(),
                     [](const NamedTensor& t) { return t.value.allFinite(); });
}

void ModelParams::CheckShapes(const ArchConfig& cfg) const {
  const ModelParams ref = Init(cfg, 0);
  if (ref.tensors_.size() != tensors_.size()) {
    throw ValidationError("params: tensor count does not match architecture");
  }
  for (const auto& t : ref.tensors_) {
    if (!Has(t.name)) throw ValidationError("params: missing tensor '" + t.name + "'");
    const auto& mine = at(t.name);
    if (mine.rows() != t.value.rows() || mine.cols() != t.value.cols()) {
      throw ValidationError("params: tensor '" + t.name + "' has wrong shape");
    }
  }
}

// ---------------------------------------------------------------------------
// Conditioning input

PatternBatch PatternBatch::Static(std::span<const PatternVector> per_item) {
  if (per_item.empty()) throw ValidationError("pattern batch: empty");
  PatternBatch p;
  p.batch = static_cast<int>(per_item.size());
  p.frames = 1;
  p.length = per_item.front().length();
  for (const auto& v : per_item) {
    if (v.length() != p.length) throw ValidationError("pattern batch: inconsistent lengths");
    p.data.insert(p.data.end(), v.gains.begin(), v.gains.end());
  }
  return p;
}

PatternBatch PatternBatch::PerFrame(std::span<const std::vector<PatternVector>> per_item) {
  if (per_item.empty() || per_item.front().empty()) throw ValidationError("pattern batch: empty");
  PatternBatch p;
  p.batch = static_cast<int>(per_item.size());
  p.frames = static_cast<int>(per_item.front().size());
  p.length = per_item.front().front().length();
  for (const auto& seq : per_item) {
    if (static_cast<int>(seq.size()) != p.frames) {
      throw ValidationError("pattern batch: inconsistent frame counts");
    }
    for (const auto& v : seq) {
      if (v.length() != p.length) throw ValidationError("pattern batch: inconsistent lengths");
      p.data.insert(p.data.end(), v.gains.begin(), v.gains.end());
    }
  }
  return p;
}

MatrixXd FilmModulate(const MatrixXd& x, const VectorXd& alpha, const VectorXd& beta) {
  if (alpha.size() != x.rows() || beta.size() != x.rows()) {
    throw ValidationError("film: alpha/beta width " + std::to_string(alpha.size()) + "/" +
                          std::to_string(beta.size()) + " does not match feature width " +
                          std::to_string(x.rows()));
  }
  MatrixXd y = (x.array().colwise() * alpha.array()).matrix();
  y.colwise() += beta;
  return y;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct ForwardPass::State {
  const ModelParams* params = nullptr;
  ArchConfig cfg;
  int batch = 0;
  int frames = 0;
  int bins = 0;

  MatrixXd patterns;                   // L x (B*T), column b*T + t
  std::vector<MatrixXd> bilstm_in;     // per f: C x (B*T)
  LstmTrace fwd_trace, bwd_trace;      // recurrent mode
  std::vector<MatrixXd> fwd_out;       // per f: H x (B*T), linear mode
  std::vector<MatrixXd> bwd_out;
  MatrixXd cond_state;                 // PV-JNF: W x (B*T)
  MatrixXd alpha, beta;                // FiLM-JNF: W x (B*T)
  std::vector<MatrixXd> features;      // per f: W x (B*T), before FiLM
  std::vector<MatrixXd> unilstm_in;    // per t: W x (B*F), column b*F + f
  LstmTrace uni_trace;
  std::vector<MatrixXd> uni_out;       // linear mode, per t: U x (B*F)
  std::vector<MatrixXd> head_raw;      // per t: 2 x (B*F), before bounding
  std::vector<ComplexGrid> masks;

  const MatrixXd& BilstmFwdOut(int f) const {
    return cfg.recurrent ? fwd_trace.hidden[f] : fwd_out[f];
  }
  const MatrixXd& BilstmBwdOut(int f) const {
    // backward direction was processed from f = F-1 down to 0
    return cfg.recurrent ? bwd_trace.hidden[bins - 1 - f] : bwd_out[f];
  }
  const MatrixXd& UniOut(int t) const { return cfg.recurrent ? uni_trace.hidden[t] : uni_out[t]; }
};

namespace {

void CheckFinite(const MatrixXd& m, const char* layer) {
  if (!m.allFinite()) throw NumericalError(std::string("forward: non-finite activations in ") + layer);
}

void CheckInputs(const ArchConfig& cfg, const FeatureBlock& features, const PatternBatch& patterns) {
  cfg.Validate();
  features.Validate();
  if (features.channels != 2 * cfg.mics) {
    throw ValidationError("forward: feature channels " + std::to_string(features.channels) +
                          " != 2Q = " + std::to_string(2 * cfg.mics));
  }
  if (features.bins != cfg.bins) {
    throw ValidationError("forward: feature bins " + std::to_string(features.bins) +
                          " != F = " + std::to_string(cfg.bins));
  }
  if (cfg.arch == Arch::kBackbone) return;
  if (patterns.batch != features.batch) throw ValidationError("forward: pattern batch size mismatch");
  if (patterns.length != cfg.pattern_length) {
    throw ValidationError("forward: pattern length " + std::to_string(patterns.length) +
                          " != L = " + std::to_string(cfg.pattern_length));
  }
  if (patterns.frames != 1 && patterns.frames != features.frames) {
    throw ValidationError("forward: pattern frames must be 1 or T");
  }
  for (double g : patterns.data) {
    if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("forward: pattern values must lie in [0, 1]");
  }
}

std::vector<const MatrixXd*> Pointers(const std::vector<MatrixXd>& v, bool reverse) {
  std::vector<const MatrixXd*> out;
  out.reserve(v.size());
  if (reverse) {
    for (auto it = v.rbegin(); it != v.rend(); ++it) out.push_back(&*it);
  } else {
    for (const auto& m : v) out.push_back(&m);
  }
  return out;
}

}  // namespace

ForwardPass::ForwardPass(const ModelParams& params, const ArchConfig& cfg,
                         const FeatureBlock& features, const PatternBatch& patterns)
    : state_(std::make_unique<State>()) {
  CheckInputs(cfg, features, patterns);
  State& s = *state_;
  s.params = &params;
  s.cfg = cfg;
  s.batch = features.batch;
  s.frames = features.frames;
  s.bins = features.bins;
  const int bt = s.batch * s.frames;
  const int bf = s.batch * s.bins;
  const int h = cfg.bilstm_hidden;
  const int w = cfg.feature_width;
  const int c = features.channels;

  // Inputs per frequency step, one column per (b, t).
  s.bilstm_in.assign(s.bins, MatrixXd(c, bt));
  for (int b = 0; b < s.batch; ++b) {
    for (int t = 0; t < s.frames; ++t) {
      for (int f = 0; f < s.bins; ++f) {
        for (int ch = 0; ch < c; ++ch) s.bilstm_in[f](ch, b * s.frames + t) = features.at(b, t, f, ch);
      }
    }
  }

  if (cfg.arch != Arch::kBackbone) {
    s.patterns.resize(cfg.pattern_length, bt);
    for (int b = 0; b < s.batch; ++b) {
      for (int t = 0; t < s.frames; ++t) {
        const int p = patterns.frames == 1 ? 0 : t;
        for (int l = 0; l < cfg.pattern_length; ++l) s.patterns(l, b * s.frames + t) = patterns.at(b, p, l);
      }
    }
  }

  MatrixXd h0 = MatrixXd::Zero(w, bt);
  if (cfg.arch == Arch::kPvJnf) {
    s.cond_state.noalias() = params.at("cond.w") * s.patterns;
    s.cond_state.colwise() += params.at("cond.b").col(0);
    h0 = s.cond_state;
  }

  // Frequency-direction BiLSTM
  if (cfg.recurrent) {
    internal::LstmWeights fw{params.at("bilstm.fwd.w_ih"), params.at("bilstm.fwd.w_hh"),
                             params.at("bilstm.fwd.b")};
    internal::LstmWeights bw{params.at("bilstm.bwd.w_ih"), params.at("bilstm.bwd.w_hh"),
                             params.at("bilstm.bwd.b")};
    internal::LstmForward(fw, Pointers(s.bilstm_in, false), h0.topRows(h), &s.fwd_trace);
    internal::LstmForward(bw, Pointers(s.bilstm_in, true), h0.bottomRows(h), &s.bwd_trace);
  } else {
    s.fwd_out.resize(s.bins);
    s.bwd_out.resize(s.bins);
    for (int f = 0; f < s.bins; ++f) {
      s.fwd_out[f].noalias() = params.at("bilstm.fwd.w_ih") * s.bilstm_in[f];
      s.fwd_out[f].colwise() += params.at("bilstm.fwd.b").col(0);
      s.fwd_out[f] += h0.topRows(h);
      s.bwd_out[f].noalias() = params.at("bilstm.bwd.w_ih") * s.bilstm_in[f];
      s.bwd_out[f].colwise() += params.at("bilstm.bwd.b").col(0);
      s.bwd_out[f] += h0.bottomRows(h);
    }
  }

  s.features.resize(s.bins);
  for (int f = 0; f < s.bins; ++f) {
    s.features[f].resize(w, bt);
    s.features[f].topRows(h) = s.BilstmFwdOut(f);
    s.features[f].bottomRows(h) = s.BilstmBwdOut(f);
    CheckFinite(s.features[f], "bilstm");
  }

  // FiLM conditioning, one (alpha, beta) per (b, t) column
  std::vector<MatrixXd> modulated;
  const std::vector<MatrixXd>* uni_source = &s.features;
  if (cfg.arch == Arch::kFilmJnf) {
    s.alpha.noalias() = params.at("film.alpha.w") * s.patterns;
    s.alpha.colwise() += params.at("film.alpha.b").col(0);
    s.beta.noalias() = params.at("film.beta.w") * s.patterns;
    s.beta.colwise() += params.at("film.beta.b").col(0);
    modulated.resize(s.bins);
    for (int f = 0; f < s.bins; ++f) {
      modulated[f] = (s.alpha.array() * s.features[f].array() + s.beta.array()).matrix();
      CheckFinite(modulated[f], "film");
    }
    uni_source = &modulated;
  }

  // Reshape [B*T, F, W] -> [B*F, T, W]
  s.unilstm_in.assign(s.frames, MatrixXd(w, bf));
  for (int f = 0; f < s.bins; ++f) {
    const MatrixXd& src = (*uni_source)[f];
    for (int b = 0; b < s.batch; ++b) {
      for (int t = 0; t < s.frames; ++t) s.unilstm_in[t].col(b * s.bins + f) = src.col(b * s.frames + t);
    }
  }

  // Time-direction UniLSTM
  const int u = cfg.unilstm_hidden;
  if (cfg.recurrent) {
    internal::LstmWeights uw{params.at("unilstm.w_ih"), params.at("unilstm.w_hh"),
                             params.at("unilstm.b")};
    internal::LstmForward(uw, Pointers(s.unilstm_in, false), MatrixXd::Zero(u, bf), &s.uni_trace);
  } else {
    s.uni_out.resize(s.frames);
    for (int t = 0; t < s.frames; ++t) {
      s.uni_out[t].noalias() = params.at("unilstm.w_ih") * s.unilstm_in[t];
      s.uni_out[t].colwise() += params.at("unilstm.b").col(0);
    }
  }

  // Linear head -> (Re, Im)
  s.head_raw.resize(s.frames);
  s.masks.assign(s.batch, ComplexGrid(s.frames, s.bins));
  const double scale = cfg.mask_bound ? *cfg.mask_bound / std::sqrt(2.0) : 0.0;
  for (int t = 0; t < s.frames; ++t) {
    CheckFinite(s.UniOut(t), "unilstm");
    s.head_raw[t].noalias() = params.at("head.w") * s.UniOut(t);
    s.head_raw[t].colwise() += params.at("head.b").col(0);
    CheckFinite(s.head_raw[t], "head");
    for (int b = 0; b < s.batch; ++b) {
      for (int f = 0; f < s.bins; ++f) {
        double re = s.head_raw[t](0, b * s.bins + f);
        double im = s.head_raw[t](1, b * s.bins + f);
        if (cfg.mask_bound) {
          re = scale * std::tanh(re / scale);
          im = scale * std::tanh(im / scale);
        }
        s.masks[b](t, f) = {re, im};
      }
    }
  }
}

ForwardPass::~ForwardPass() = default;
ForwardPass::ForwardPass(ForwardPass&&) noexcept = default;
ForwardPass& ForwardPass::operator=(ForwardPass&&) noexcept = default;

const std::vector<ComplexGrid>& ForwardPass::masks() const { return state_->masks; }

ModelParams ForwardPass::Backward(const std::vector<ComplexGrid>& grad_masks) const {
  const State& s = *state_;
  const ModelParams& params = *s.params;
  const ArchConfig& cfg = s.cfg;
  if (static_cast<int>(grad_masks.size()) != s.batch) throw ValidationError("backward: batch mismatch");
  ModelParams grad = ModelParams::ZerosLike(params);
  const int bt = s.batch * s.frames;
  const int bf = s.batch * s.bins;
  const int h = cfg.bilstm_hidden;
  const int w = cfg.feature_width;
  const double scale = cfg.mask_bound ? *cfg.mask_bound / std::sqrt(2.0) : 0.0;

  // Head
  std::vector<MatrixXd> d_uni_out(s.frames);
  for (int t = 0; t < s.frames; ++t) {
    MatrixXd d_raw(2, bf);
    for (int b = 0; b < s.batch; ++b) {
      for (int f = 0; f < s.bins; ++f) {
        const auto g = grad_masks[b](t, f);
        double dre = g.real();
        double dim = g.imag();
        if (cfg.mask_bound) {
          const double tr = std::tanh(s.head_raw[t](0, b * s.bins + f) / scale);
          const double ti = std::tanh(s.head_raw[t](1, b * s.bins + f) / scale);
          dre *= 1.0 - tr * tr;
          dim *= 1.0 - ti * ti;
        }
        d_raw(0, b * s.bins + f) = dre;
        d_raw(1, b * s.bins + f) = dim;
      }
    }
    grad.at("head.w").noalias() += d_raw * s.UniOut(t).transpose();
    grad.at("head.b") += d_raw.rowwise().sum();
    d_uni_out[t].noalias() = params.at("head.w").transpose() * d_raw;
  }

  // UniLSTM
  std::vector<MatrixXd> d_uni_in(s.frames);
  if (cfg.recurrent) {
    internal::LstmWeights uw{params.at("unilstm.w_ih"), params.at("unilstm.w_hh"),
                             params.at("unilstm.b")};
    internal::LstmGrads ug{grad.at("unilstm.w_ih"), grad.at("unilstm.w_hh"), grad.at("unilstm.b")};
    internal::LstmBackward(uw, Pointers(s.unilstm_in, false), s.uni_trace, d_uni_out, ug, nullptr,
                           &d_uni_in);
  } else {
    for (int t = 0; t < s.frames; ++t) {
      grad.at("unilstm.w_ih").noalias() += d_uni_out[t] * s.unilstm_in[t].transpose();
      grad.at("unilstm.b") += d_uni_out[t].rowwise().sum();
      d_uni_in[t].noalias() = params.at("unilstm.w_ih").transpose() * d_uni_out[t];
    }
  }

  // Undo the reshape: per-f gradients with (b, t) columns
  std::vector<MatrixXd> d_modulated(s.bins, MatrixXd(w, bt));
  for (int f = 0; f < s.bins; ++f) {
    for (int b = 0; b < s.batch; ++b) {
      for (int t = 0; t < s.frames; ++t) d_modulated[f].col(b * s.frames + t) = d_uni_in[t].col(b * s.bins + f);
    }
  }

  // FiLM
  std::vector<MatrixXd> d_features;
  if (cfg.arch == Arch::kFilmJnf) {
    MatrixXd d_alpha = MatrixXd::Zero(w, bt);
    MatrixXd d_beta = MatrixXd::Zero(w, bt);
    d_features.resize(s.bins);
    for (int f = 0; f < s.bins; ++f) {
      d_alpha.array() += d_modulated[f].array() * s.features[f].array();
      d_beta += d_modulated[f];
      d_features[f] = (d_modulated[f].array() * s.alpha.array()).matrix();
    }
    grad.at("film.alpha.w").noalias() += d_alpha * s.patterns.transpose();
    grad.at("film.alpha.b") += d_alpha.rowwise().sum();
    grad.at("film.beta.w").noalias() += d_beta * s.patterns.transpose();
    grad.at("film.beta.b") += d_beta.rowwise().sum();
  } else {
    d_features = std::move(d_modulated);
  }

  // BiLSTM
  MatrixXd d_h0(w, bt);
  if (cfg.recurrent) {
    std::vector<MatrixXd> d_fwd(s.bins);
    std::vector<MatrixXd> d_bwd(s.bins);
    for (int f = 0; f < s.bins; ++f) {
      d_fwd[f] = d_features[f].topRows(h);
      d_bwd[s.bins - 1 - f] = d_features[f].bottomRows(h);
    }
    internal::LstmWeights fw{params.at("bilstm.fwd.w_ih"), params.at("bilstm.fwd.w_hh"),
                             params.at("bilstm.fwd.b")};
    internal::LstmWeights bw{params.at("bilstm.bwd.w_ih"), params.at("bilstm.bwd.w_hh"),
                             params.at("bilstm.bwd.b")};
    internal::LstmGrads fg{grad.at("bilstm.fwd.w_ih"), grad.at("bilstm.fwd.w_hh"),
                           grad.at("bilstm.fwd.b")};
    internal::LstmGrads bg{grad.at("bilstm.bwd.w_ih"), grad.at("bilstm.bwd.w_hh"),
                           grad.at("bilstm.bwd.b")};
    MatrixXd dh0_fwd;
    MatrixXd dh0_bwd;
    internal::LstmBackward(fw, Pointers(s.bilstm_in, false), s.fwd_trace, d_fwd, fg, &dh0_fwd);
    internal::LstmBackward(bw, Pointers(s.bilstm_in, true), s.bwd_trace, d_bwd, bg, &dh0_bwd);
    d_h0.topRows(h) = dh0_fwd;
    d_h0.bottomRows(h) = dh0_bwd;
  } else {
    d_h0.setZero();
    for (int f = 0; f < s.bins; ++f) {
      const auto top = d_features[f].topRows(h);
      const auto bottom = d_features[f].bottomRows(h);
      grad.at("bilstm.fwd.w_ih").noalias() += top * s.bilstm_in[f].transpose();
      grad.at("bilstm.fwd.b") += top.rowwise().sum();
      grad.at("bilstm.bwd.w_ih").noalias() += bottom * s.bilstm_in[f].transpose();
      grad.at("bilstm.bwd.b") += bottom.rowwise().sum();
      d_h0.topRows(h) += top;
      d_h0.bottomRows(h) += bottom;
    }
  }

  if (cfg.arch == Arch::kPvJnf) {
    grad.at("cond.w").noalias() += d_h0 * s.patterns.transpose();
    grad.at("cond.b") += d_h0.rowwise().sum();
  }
  return grad;
}

std::vector<ComplexGrid> Forward(const ModelParams& params, const ArchConfig& cfg,
                                 const FeatureBlock& features, const PatternBatch& patterns) {
  ForwardPass pass(params, cfg, features, patterns);
  return pass.masks();
}

// ---------------------------------------------------------------------------
// Mask application and loss

Spectrogram ApplyMask(const ComplexGrid& mask, const Spectrogram& reference) {
  if (mask.rows() != reference.data.rows() || mask.cols() != reference.data.cols()) {
    throw ValidationError("apply_mask: mask is " + std::to_string(mask.rows()) + "x" +
                          std::to_string(mask.cols()) + ", spectrogram is " +
                          std::to_string(reference.frames()) + "x" + std::to_string(reference.bins()));
  }
  Spectrogram out = reference;
  out.data = mask * reference.data;
  return out;
}

double LossL1(std::span<const std::vector<double>> targets,
              std::span<const std::vector<double>> estimates, double epsilon) {
  if (targets.size() != estimates.size()) throw ValidationError("loss: batch size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    if (targets[b].size() != estimates[b].size()) throw ValidationError("loss: length mismatch");
    for (std::size_t i = 0; i < targets[b].size(); ++i) {
      num += std::abs(targets[b][i] - estimates[b][i]);
      den += std::abs(targets[b][i]);
    }
  }
  return num / (den + epsilon);
}

namespace {

FeatureBlock BatchFeatures(std::span<const TrainingExample* const> batch) {
  std::vector<FeatureBlock> items;
  items.reserve(batch.size());
  for (const auto* ex : batch) items.push_back(ex->features);
  return ConcatBatch(items);
}

PatternBatch BatchPatterns(std::span<const TrainingExample* const> batch, int frames) {
  bool all_static = true;
  for (const auto* ex : batch) {
    if (ex->patterns.empty()) throw ValidationError("training example without a pattern");
    all_static = all_static && ex->patterns.size() == 1;
  }
  if (all_static) {
    std::vector<PatternVector> v;
    for (const auto* ex : batch) v.push_back(ex->patterns.front());
    return PatternBatch::Static(v);
  }
  std::vector<std::vector<PatternVector>> seqs;
  for (const auto* ex : batch) {
    if (ex->patterns.size() == 1) {
      seqs.emplace_back(frames, ex->patterns.front());
    } else {
      seqs.push_back(ex->patterns);
    }
  }
  return PatternBatch::PerFrame(seqs);
}

struct Estimates {
  std::vector<std::vector<double>> targets;
  std::vector<std::vector<double>> signals;
};

Estimates Reconstruct(std::span<const TrainingExample* const> batch,
                      const std::vector<ComplexGrid>& masks) {
  Estimates e;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    e.targets.push_back(batch[b]->target);
    e.signals.push_back(Istft(ApplyMask(masks[b], batch[b]->reference)));
    if (e.signals.back().size() != e.targets.back().size()) {
      throw ValidationError("training example: target length does not match reference");
    }
  }
  return e;
}

}  // namespace

double ComputeLoss(const ModelParams& params, const ArchConfig& cfg,
                   std::span<const TrainingExample* const> batch, double epsilon) {
  if (batch.empty()) throw ValidationError("loss: empty batch");
  const FeatureBlock features = BatchFeatures(batch);
  const auto masks = Forward(params, cfg, features, BatchPatterns(batch, features.frames));
  const auto est = Reconstruct(batch, masks);
  return LossL1(est.targets, est.signals, epsilon);
}

LossAndGrad ComputeLossAndGrad(const ModelParams& params, const ArchConfig& cfg,
                               std::span<const TrainingExample* const> batch, double epsilon) {
  if (batch.empty()) throw ValidationError("loss: empty batch");
  const FeatureBlock features = BatchFeatures(batch);
  ForwardPass pass(params, cfg, features, BatchPatterns(batch, features.frames));
  const auto est = Reconstruct(batch, pass.masks());

  double den = epsilon;
  for (const auto& z : est.targets) {
    for (double v : z) den += std::abs(v);
  }
  LossAndGrad out;
  out.loss = LossL1(est.targets, est.signals, epsilon);
  if (!std::isfinite(out.loss)) throw NumericalError("loss: non-finite value");

  std::vector<ComplexGrid> grad_masks;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& z = est.targets[b];
    const auto& zh = est.signals[b];
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - zh[i];
      // d|z - zh| / d zh = -sign(z - zh)
      g[i] = d > 0.0 ? -1.0 / den : (d < 0.0 ? 1.0 / den : 0.0);
    }
    const Spectrogram& ref = batch[b]->reference;
    const Spectrogram dz = IstftBackward(ref.config, ref.num_samples, g);
    grad_masks.push_back(dz.data * ref.data.conjugate());
  }
  out.grad = pass.Backward(grad_masks);
  return out;
}

std::vector<double> Enhance(const ModelParams& params, const ArchConfig& cfg,
                            const TrainingExample& example) {
  const TrainingExample* one[] = {&example};
  const auto masks = Forward(params, cfg, example.features, BatchPatterns(one, example.features.frames));
  return Istft(ApplyMask(masks.front(), example.reference));
}

GradCheckResult GradCheck(const ModelParams& params, const ArchConfig& cfg,
                          std::span<const TrainingExample* const> batch, double epsilon,
                          int entries_per_tensor, double step, std::uint64_t seed) {
  const LossAndGrad analytic = ComputeLossAndGrad(params, cfg, batch, epsilon);
  if (!analytic.grad.AllFinite()) throw NumericalError("grad_check: non-finite analytic gradient");
  std::mt19937_64 rng(seed);
  ModelParams probe = params;
  GradCheckResult result;
  for (const auto& tensor : params.tensors()) {
    const Eigen::Index count = tensor.value.size();
    std::vector<Eigen::Index> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<Eigen::Index>(count, entries_per_tensor));

    MatrixXd& p = probe.at(tensor.name);
    const MatrixXd& a = analytic.grad.at(tensor.name);
    double diff2 = 0.0;
    double a2 = 0.0;
    double n2 = 0.0;
    for (Eigen::Index k : idx) {
      const double orig = p(k);
      p(k) = orig + step;
      const double up = ComputeLoss(probe, cfg, batch, epsilon);
      p(k) = orig - step;
      const double down = ComputeLoss(probe, cfg, batch, epsilon);
      p(k) = orig;
      const double numeric = (up - down) / (2.0 * step);
      if (!std::isfinite(numeric)) throw NumericalError("grad_check: non-finite numeric gradient");
      diff2 += (a(k) - numeric) * (a(k) - numeric);
      a2 += a(k) * a(k);
      n2 += numeric * numeric;
    }
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    const double rel = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
    result.per_tensor[tensor.name] = rel;
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || batch_size < 1 || epochs < 1 || !(epsilon > 0.0)) {
    throw ValidationError("train: learning_rate, batch_size, epochs and epsilon must be positive");
  }
  if (max_steps && *max_steps < 1) throw ValidationError("train: max_steps must be positive");
}

Trainer::Trainer(ArchConfig arch, TrainConfig train, ModelParams params)
    : arch_(std::move(arch)),
      train_(std::move(train)),
      params_(std::move(params)),
      m_(ModelParams::ZerosLike(params_)),
      v_(ModelParams::ZerosLike(params_)) {
  arch_.Validate();
  train_.Validate();
  params_.CheckShapes(arch_);
}

double Trainer::Step(std::span<const TrainingExample* const> batch) {
  LossAndGrad lg = ComputeLossAndGrad(params_, arch_, batch, train_.epsilon);
  if (!std::isfinite(lg.loss) || !lg.grad.AllFinite()) {
    throw NumericalError("train: divergence at step " + std::to_string(step_) +
                         " (loss = " + std::to_string(lg.loss) + ")");
  }
  ++step_;
  const double c1 = 1.0 - std::pow(train_.beta1, step_);
  const double c2 = 1.0 - std::pow(train_.beta2, step_);
  auto& pt = params_.tensors();
  auto& mt = m_.tensors();
  auto& vt = v_.tensors();
  const auto& gt = lg.grad.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    const auto g = gt[k].value.array();
    mt[k].value.array() = train_.beta1 * mt[k].value.array() + (1.0 - train_.beta1) * g;
    vt[k].value.array() = train_.beta2 * vt[k].value.array() + (1.0 - train_.beta2) * g.square();
    pt[k].value.array() -= train_.learning_rate * (mt[k].value.array() / c1) /
                           ((vt[k].value.array() / c2).sqrt() + train_.adam_epsilon);
  }
  return lg.loss;
}

TrainResult Train(const ArchConfig& arch, const TrainConfig& train,
                  const std::vector<TrainingExample>& data, std::optional<ModelParams> initial,
                  const TrainProgress& progress) {
  train.Validate();
  if (data.empty()) throw ValidationError("train: empty dataset");
  Trainer trainer(arch, train, initial ? std::move(*initial) : ModelParams::Init(arch, train.rng_seed));
  std::mt19937_64 rng(train.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  bool done = false;
  for (int epoch = 0; epoch < train.epochs && !done; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int count = 0;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      std::vector<const TrainingExample*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + train.batch_size); ++k) {
        batch.push_back(&data[order[k]]);
      }
      const double loss = trainer.Step(batch);
      result.step_loss.push_back(loss);
      sum += loss;
      ++count;
      if (progress) progress(trainer.steps(), loss);
      if (train.max_steps && trainer.steps() >= *train.max_steps) {
        done = true;
        break;
      }
    }
    result.epoch_loss.push_back(sum / count);
  }
  result.steps = trainer.steps();
  result.params = trainer.params();
  return result;
}

}  // namespace undf
