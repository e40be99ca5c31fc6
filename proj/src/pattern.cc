#include "undf/pattern.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "undf/errors.h"

namespace undf {

namespace {

constexpr int kMaxRecipeRetries = 32;

bool IsFiniteAngle(double theta) { return std::isfinite(theta); }

SimplifiedDmaSpec RandomDma(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> mu_index(0, 9);
  std::uniform_real_distribution<double> steer(0.0, kTwoPi);
  std::uniform_int_distribution<int> order(1, 11);
  SimplifiedDmaSpec spec;
  spec.mu = mu_index(rng) / 10.0;
  spec.theta_s = steer(rng);
  spec.order_j = order(rng);
  return spec;
}

RectSpec RandomRect(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  RectSpec spec;
  spec.theta_start = angle(rng);
  spec.theta_end = angle(rng);
  return spec;
}

std::vector<PatternComponent> DrawComponents(const RecipeConfig& cfg, std::mt19937_64& rng) {
  std::vector<PatternComponent> out;
  std::uniform_int_distribution<int> count(1, cfg.max_components);
  switch (cfg.recipe) {
    case Recipe::kBminus:
      out.emplace_back(RandomDma(rng));
      break;
    case Recipe::kB: {
      const int c = count(rng);
      for (int i = 0; i < c; ++i) out.emplace_back(RandomDma(rng));
      break;
    }
    case Recipe::kBplus: {
      std::uniform_int_distribution<int> branch(0, 2);
      const int kind = branch(rng);
      if (kind == 0) {
        const int c = count(rng);
        for (int i = 0; i < c; ++i) out.emplace_back(RandomDma(rng));
      } else if (kind == 1) {
        const int c = count(rng);
        for (int i = 0; i < c; ++i) out.emplace_back(RandomRect(rng));
      } else {
        // Mixed: at least one of each primitive, the rest drawn 50/50.
        std::uniform_int_distribution<int> mixed_count(2, std::max(2, cfg.max_components));
        std::bernoulli_distribution coin(0.5);
        const int c = mixed_count(rng);
        out.emplace_back(RandomDma(rng));
        out.emplace_back(RandomRect(rng));
        for (int i = 2; i < c; ++i) {
          if (coin(rng)) {
            out.emplace_back(RandomDma(rng));
          } else {
            out.emplace_back(RandomRect(rng));
          }
        }
      }
      break;
    }
    case Recipe::kA:
      throw ValidationError("GenRecipe: recipe A is an enumeration, use GenRecipeA");
  }
  return out;
}

}  // namespace

double DegToRad(double deg) { return deg * kPi / 180.0; }
double RadToDeg(double rad) { return rad * 180.0 / kPi; }

double NormalizeAngle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double DbToGain(double db) { return std::pow(10.0, db / 20.0); }

void Validate(const SimplifiedDmaSpec& spec) {
  if (!(spec.mu >= 0.0 && spec.mu <= 1.0)) {
    throw ValidationError("simplified DMA: mu must lie in [0, 1], got " + std::to_string(spec.mu));
  }
  if (spec.order_j < 1) {
    throw ValidationError("simplified DMA: order J must be >= 1, got " +
                          std::to_string(spec.order_j));
  }
  if (!IsFiniteAngle(spec.theta_s)) throw ValidationError("simplified DMA: non-finite theta_s");
}

void Validate(const GeneralDmaSpec& spec) {
  if (spec.coeffs.empty()) throw ValidationError("general DMA: coefficient list is empty");
  for (double a : spec.coeffs) {
    if (!std::isfinite(a)) throw ValidationError("general DMA: non-finite coefficient");
  }
  if (!IsFiniteAngle(spec.theta_s)) throw ValidationError("general DMA: non-finite theta_s");
}

void Validate(const RectSpec& spec) {
  if (!IsFiniteAngle(spec.theta_start) || !IsFiniteAngle(spec.theta_end)) {
    throw ValidationError("rect pattern: non-finite arc limits");
  }
}

double EvalSimplifiedDma(const SimplifiedDmaSpec& spec, double theta) {
  Validate(spec);
  const double base = spec.mu + (1.0 - spec.mu) * std::cos(theta - spec.theta_s);
  return std::pow(std::abs(base), spec.order_j);
}

double EvalGeneralDma(const GeneralDmaSpec& spec, double theta) {
  Validate(spec);
  const double c = std::cos(theta - spec.theta_s);
  // Horner over a_0 + a_1 c + ... + a_J c^J
  double acc = 0.0;
  for (auto it = spec.coeffs.rbegin(); it != spec.coeffs.rend(); ++it) acc = acc * c + *it;
  return acc;
}

double EvalRect(const RectSpec& spec, double theta) {
  Validate(spec);
  const double start = NormalizeAngle(spec.theta_start);
  const double end = NormalizeAngle(spec.theta_end);
  const double t = NormalizeAngle(theta);
  if (start <= end) return (t >= start && t <= end) ? 1.0 : 0.0;
  return (t >= start || t <= end) ? 1.0 : 0.0;
}

double EvalComponent(const PatternComponent& component, double theta) {
  return std::visit(
      [theta](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, SimplifiedDmaSpec>) {
          return EvalSimplifiedDma(spec, theta);
        } else if constexpr (std::is_same_v<T, GeneralDmaSpec>) {
          return EvalGeneralDma(spec, theta);
        } else {
          return EvalRect(spec, theta);
        }
      },
      component);
}

std::string ComponentKind(const PatternComponent& component) {
  switch (component.index()) {
    case 0:
      return "dma-simplified";
    case 1:
      return "dma-general";
    default:
      return "rect";
  }
}

double ApplyFloor(double gain, double floor_db) {
  if (!(floor_db <= 0.0)) {
    throw ValidationError("floor_db must be <= 0 dB, got " + std::to_string(floor_db));
  }
  return std::max(gain, DbToGain(floor_db));
}

std::vector<double> ApplyFloor(std::span<const double> gains, double floor_db) {
  std::vector<double> out(gains.size());
  std::transform(gains.begin(), gains.end(), out.begin(),
                 [floor_db](double g) { return ApplyFloor(g, floor_db); });
  return out;
}

AnalyticPattern AnalyticPattern::Combine(std::vector<PatternComponent> components,
                                         double floor_db) {
  if (components.empty()) throw ValidationError("combine: at least one component required");
  if (!(floor_db <= 0.0)) throw ValidationError("combine: floor_db must be <= 0");
  for (const auto& c : components) std::visit([](const auto& s) { Validate(s); }, c);

  AnalyticPattern p;
  p.components_ = std::move(components);
  p.floor_db_ = floor_db;
  p.normalizer_ = 1.0;
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kNormalizerGridSize; ++i) {
    peak = std::max(peak, p.RawSum(kTwoPi * i / kNormalizerGridSize));
  }
  if (!(peak > 0.0)) {
    throw DegeneratePatternError("combine: component sum is never positive on the grid");
  }
  p.normalizer_ = peak;
  return p;
}

AnalyticPattern AnalyticPattern::Omni(double floor_db) {
  return Combine({SimplifiedDmaSpec{1.0, 0.0, 1}}, floor_db);
}

AnalyticPattern AnalyticPattern::Cardioid(double theta_s, double mu, int order_j,
                                          double floor_db) {
  return Combine({SimplifiedDmaSpec{mu, NormalizeAngle(theta_s), order_j}}, floor_db);
}

double AnalyticPattern::RawSum(double theta) const {
  double sum = 0.0;
  for (const auto& c : components_) sum += EvalComponent(c, theta);
  return sum;
}

double AnalyticPattern::Evaluate(double theta) const {
  return std::clamp(RawSum(theta) / normalizer_, 0.0, 1.0);
}

double AnalyticPattern::EvaluateFloored(double theta) const {
  return std::max(Evaluate(theta), floor_gain());
}

AnalyticPattern AnalyticPattern::WithFloorDb(double floor_db) const {
  if (!(floor_db <= 0.0)) throw ValidationError("floor_db must be <= 0");
  AnalyticPattern p = *this;
  p.floor_db_ = floor_db;
  return p;
}

double PatternVector::AngleOf(int index) const { return kTwoPi * index / length(); }

void PatternVector::Validate(double min_gain) const {
  if (gains.size() < 4) {
    throw ValidationError("pattern vector: length must be >= 4, got " +
                          std::to_string(gains.size()));
  }
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double g = gains[i];
    if (!std::isfinite(g) || g < min_gain || g > 1.0) {
      throw ValidationError("pattern vector: gain[" + std::to_string(i) + "] = " +
                            std::to_string(g) + " outside [" + std::to_string(min_gain) +
                            ", 1]");
    }
  }
}

PatternVector SamplePattern(const AnalyticPattern& pattern, int length) {
  if (length < 4) throw ValidationError("sample_pattern: L must be >= 4");
  PatternVector v;
  v.gains.resize(length);
  for (int i = 0; i < length; ++i) v.gains[i] = pattern.EvaluateFloored(kTwoPi * i / length);
  return v;
}

double InterpPattern(const PatternVector& vector, double theta) {
  const int n = vector.length();
  if (n < 1) throw ValidationError("interp_pattern: empty vector");
  const double pos = NormalizeAngle(theta) / kTwoPi * n;
  // Angles computed as 2*pi*i/L carry round-off; treat them as the sample itself.
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) return vector.gains[static_cast<int>(nearest) % n];
  int i0 = static_cast<int>(std::floor(pos));
  const double frac = pos - i0;
  i0 %= n;
  const int i1 = (i0 + 1) % n;
  return (1.0 - frac) * vector.gains[i0] + frac * vector.gains[i1];
}

double GainAt(const GainPattern& pattern, double theta) {
  if (const auto* a = std::get_if<AnalyticPattern>(&pattern)) return a->EvaluateFloored(theta);
  return InterpPattern(std::get<PatternVector>(pattern), theta);
}

Recipe ParseRecipe(const std::string& name) {
  std::string n;
  for (char ch : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (n == "a") return Recipe::kA;
  if (n == "bminus" || n == "b-") return Recipe::kBminus;
  if (n == "b") return Recipe::kB;
  if (n == "bplus" || n == "b+") return Recipe::kBplus;
  throw ValidationError("unknown recipe '" + name + "' (expected a, bminus, b, bplus)");
}

std::string RecipeName(Recipe recipe) {
  switch (recipe) {
    case Recipe::kA:
      return "a";
    case Recipe::kBminus:
      return "bminus";
    case Recipe::kB:
      return "b";
    case Recipe::kBplus:
      return "bplus";
  }
  return "?";
}

void RecipeConfig::Validate() const {
  if (max_components < 1) throw ValidationError("recipe: max_components must be >= 1");
  if (patterns_per_setup < 1) throw ValidationError("recipe: patterns_per_setup must be >= 1");
  if (!(floor_db <= 0.0)) throw ValidationError("recipe: floor_db must be <= 0");
}

std::vector<AnalyticPattern> GenRecipeA(double floor_db) {
  std::vector<AnalyticPattern> out;
  out.reserve(60);
  for (int m = 0; m < 10; ++m) {
    for (int s = 0; s < 6; ++s) {
      out.push_back(AnalyticPattern::Combine(
          {SimplifiedDmaSpec{m / 10.0, DegToRad(60.0 * s), 1}}, floor_db));
    }
  }
  return out;
}

AnalyticPattern GenRecipe(const RecipeConfig& cfg, std::mt19937_64& rng) {
  cfg.Validate();
  for (int attempt = 0; attempt < kMaxRecipeRetries; ++attempt) {
    auto components = DrawComponents(cfg, rng);
    try {
      return AnalyticPattern::Combine(std::move(components), cfg.floor_db);
    } catch (const DegeneratePatternError&) {
      // zero-width arcs can miss every grid point; draw again
    }
  }
  throw DegeneratePatternError("gen_recipe: no non-degenerate pattern after " +
                               std::to_string(kMaxRecipeRetries) + " draws");
}

std::vector<AnalyticPattern> GenRecipeBatch(const RecipeConfig& cfg, std::mt19937_64& rng) {
  if (cfg.recipe == Recipe::kA) return GenRecipeA(cfg.floor_db);
  std::vector<AnalyticPattern> out;
  out.reserve(cfg.patterns_per_setup);
  for (int i = 0; i < cfg.patterns_per_setup; ++i) out.push_back(GenRecipe(cfg, rng));
  return out;
}

}  // namespace undf
