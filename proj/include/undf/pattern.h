#pragma once

// Directivity patterns: closed-form DMA / rectangular primitives, their
// max-normalized linear combinations, sampled pattern vectors and the
// random training recipes.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace undf {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline constexpr int kDefaultPatternLength = 72;
inline constexpr double kDefaultFloorDb = -20.0;
// Grid used to find the max of a combination (0.5 degree spacing).
inline constexpr int kNormalizerGridSize = 720;

double DegToRad(double deg);
double RadToDeg(double rad);
// Maps any angle onto [0, 2*pi).
double NormalizeAngle(double theta);
double DbToGain(double db);

// |mu + (1 - mu) cos(theta - theta_s)|^J
struct SimplifiedDmaSpec {
  double mu = 0.5;
  double theta_s = 0.0;
  int order_j = 1;
};

// sum_j a_j cos^j(theta - theta_s). Not sign-constrained.
struct GeneralDmaSpec {
  std::vector<double> coeffs;
  double theta_s = 0.0;
};

// 1 on the counter-clockwise arc theta_start -> theta_end (inclusive), else 0.
// theta_start > theta_end wraps through 0.
struct RectSpec {
  double theta_start = 0.0;
  double theta_end = 0.0;
};

using PatternComponent = std::variant<SimplifiedDmaSpec, GeneralDmaSpec, RectSpec>;

void Validate(const SimplifiedDmaSpec& spec);
void Validate(const GeneralDmaSpec& spec);
void Validate(const RectSpec& spec);

double EvalSimplifiedDma(const SimplifiedDmaSpec& spec, double theta);
double EvalGeneralDma(const GeneralDmaSpec& spec, double theta);
double EvalRect(const RectSpec& spec, double theta);
double EvalComponent(const PatternComponent& component, double theta);

std::string ComponentKind(const PatternComponent& component);

double ApplyFloor(double gain, double floor_db);
std::vector<double> ApplyFloor(std::span<const double> gains, double floor_db);

// A max-normalized sum of components with a suppression floor.
//
// Evaluate() returns the normalized sum clamped to [0, 1]; the floor is only
// applied by EvaluateFloored(), so the pattern algebra stays testable without
// it. The normalizer is the maximum of the raw sum over the 0.5 degree grid;
// off-grid peaks that exceed it are clipped to 1.
class AnalyticPattern {
 public:
  AnalyticPattern() = default;

  // Throws ValidationError for an empty list / invalid spec and
  // DegeneratePatternError when the sum never rises above zero.
  static AnalyticPattern Combine(std::vector<PatternComponent> components,
                                 double floor_db = kDefaultFloorDb);
  static AnalyticPattern Omni(double floor_db = kDefaultFloorDb);
  static AnalyticPattern Cardioid(double theta_s, double mu = 0.5, int order_j = 1,
                                  double floor_db = kDefaultFloorDb);

  double RawSum(double theta) const;
  double Evaluate(double theta) const;
  double EvaluateFloored(double theta) const;

  const std::vector<PatternComponent>& components() const { return components_; }
  double normalizer() const { return normalizer_; }
  double floor_db() const { return floor_db_; }
  double floor_gain() const { return DbToGain(floor_db_); }

  AnalyticPattern WithFloorDb(double floor_db) const;

 private:
  std::vector<PatternComponent> components_;
  double normalizer_ = 1.0;
  double floor_db_ = kDefaultFloorDb;
};

// L uniform samples on [0, 2*pi); index i sits at 2*pi*i/L.
struct PatternVector {
  std::vector<double> gains;

  int length() const { return static_cast<int>(gains.size()); }
  double AngleOf(int index) const;
  // Length >= 4, finite, within [min_gain, 1].
  void Validate(double min_gain = 0.0) const;
};

PatternVector SamplePattern(const AnalyticPattern& pattern, int length = kDefaultPatternLength);
// Circular linear interpolation; exact at the sample angles.
double InterpPattern(const PatternVector& vector, double theta);

// Either representation can drive target synthesis and the oracle filter.
using GainPattern = std::variant<AnalyticPattern, PatternVector>;
// Floored analytic value at the exact angle, or the interpolated vector value.
double GainAt(const GainPattern& pattern, double theta);

enum class Recipe { kA, kBminus, kB, kBplus };

Recipe ParseRecipe(const std::string& name);
std::string RecipeName(Recipe recipe);

struct RecipeConfig {
  Recipe recipe = Recipe::kB;
  int max_components = 4;
  int patterns_per_setup = 60;
  double floor_db = kDefaultFloorDb;
  std::uint64_t rng_seed = 0;

  void Validate() const;
};

// First-order grid: mu in {0, .1, ..., .9} x theta_s in {0, 60, ..., 300} deg.
std::vector<AnalyticPattern> GenRecipeA(double floor_db = kDefaultFloorDb);

// One random pattern for Bminus / B / Bplus.
AnalyticPattern GenRecipe(const RecipeConfig& cfg, std::mt19937_64& rng);

// patterns_per_setup patterns; Recipe A is returned as the full enumeration.
std::vector<AnalyticPattern> GenRecipeBatch(const RecipeConfig& cfg, std::mt19937_64& rng);

}  // namespace undf
