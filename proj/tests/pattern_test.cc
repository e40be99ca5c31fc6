#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "undf/errors.h"
#include "undf/pattern.h"

namespace undf {
namespace {

TEST(SimplifiedDma, PeakAtSteeringDirection) {
  EXPECT_DOUBLE_EQ(EvalSimplifiedDma({0.5, 0.0, 1}, 0.0), 1.0);
}

TEST(SimplifiedDma, CardioidNull) {
  EXPECT_NEAR(EvalSimplifiedDma({0.5, 0.0, 1}, kPi), 0.0, 1e-15);
}

TEST(SimplifiedDma, SecondOrderHandValue) {
  // |0.2 + 0.8 * cos(60 deg)|^2 = 0.6^2
  EXPECT_NEAR(EvalSimplifiedDma({0.2, 0.0, 2}, kPi / 3.0), 0.36, 1e-12);
}

TEST(SimplifiedDma, RejectsInvalidSpecs) {
  EXPECT_THROW(EvalSimplifiedDma({1.2, 0.0, 1}, 0.0), ValidationError);
  EXPECT_THROW(EvalSimplifiedDma({-0.1, 0.0, 1}, 0.0), ValidationError);
  EXPECT_THROW(EvalSimplifiedDma({0.5, 0.0, 0}, 0.0), ValidationError);
}

TEST(SimplifiedDma, OmniForMuOneAnyOrder) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  for (int order = 1; order <= 11; ++order) {
    for (int k = 0; k < 50; ++k) {
      EXPECT_DOUBLE_EQ(EvalSimplifiedDma({1.0, angle(rng), order}, angle(rng)), 1.0);
    }
  }
}

TEST(SimplifiedDma, PeriodicAndSymmetricAboutSteering) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_int_distribution<int> order(1, 11);
  for (int k = 0; k < 2000; ++k) {
    const SimplifiedDmaSpec spec{unit(rng), angle(rng), order(rng)};
    const double delta = angle(rng);
    const double base = EvalSimplifiedDma(spec, spec.theta_s + delta);
    EXPECT_NEAR(base, EvalSimplifiedDma(spec, spec.theta_s - delta), 1e-12);
    EXPECT_NEAR(base, EvalSimplifiedDma(spec, spec.theta_s + delta + kTwoPi), 1e-12);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0 + 1e-15);
  }
}

TEST(GeneralDma, Examples) {
  EXPECT_DOUBLE_EQ(EvalGeneralDma({{1.0}, 0.3}, 2.1), 1.0);
  EXPECT_NEAR(EvalGeneralDma({{0.5, 0.5}, 0.0}, kPi), 0.0, 1e-15);
  EXPECT_NEAR(EvalGeneralDma({{0.25, 0.5, 0.25}, 0.0}, kPi / 2.0), 0.25, 1e-15);
  EXPECT_THROW(EvalGeneralDma({{}, 0.0}, 0.0), ValidationError);
}

TEST(GeneralDma, MayBeNegative) {
  // supercardioid-like rear lobe
  EXPECT_LT(EvalGeneralDma({{0.2, 0.8}, 0.0}, kPi), 0.0);
}

TEST(Rect, InsideOutsideAndWrap) {
  const RectSpec arc{DegToRad(30.0), DegToRad(90.0)};
  EXPECT_EQ(EvalRect(arc, DegToRad(45.0)), 1.0);
  EXPECT_EQ(EvalRect(arc, DegToRad(120.0)), 0.0);
  EXPECT_EQ(EvalRect({DegToRad(350.0), DegToRad(10.0)}, 0.0), 1.0);
  EXPECT_EQ(EvalRect({DegToRad(350.0), DegToRad(10.0)}, DegToRad(180.0)), 0.0);
}

TEST(Rect, BoundariesAreInside) {
  const RectSpec arc{DegToRad(30.0), DegToRad(90.0)};
  EXPECT_EQ(EvalRect(arc, arc.theta_start), 1.0);
  EXPECT_EQ(EvalRect(arc, arc.theta_end), 1.0);
}

TEST(Combine, SingleCardioidIsUnchanged) {
  const auto p = AnalyticPattern::Combine({SimplifiedDmaSpec{0.5, 0.0, 1}});
  EXPECT_DOUBLE_EQ(p.normalizer(), 1.0);
  for (int i = 0; i < 360; ++i) {
    const double th = DegToRad(i);
    EXPECT_NEAR(p.Evaluate(th), EvalSimplifiedDma({0.5, 0.0, 1}, th), 1e-15);
  }
}

TEST(Combine, OpposedCardioidsSumToOmni) {
  const auto p = AnalyticPattern::Combine(
      {SimplifiedDmaSpec{0.5, 0.0, 1}, SimplifiedDmaSpec{0.5, kPi, 1}});
  for (int i = 0; i < 720; ++i) EXPECT_NEAR(p.Evaluate(DegToRad(0.5 * i + 0.1)), 1.0, 1e-12);
}

TEST(Combine, DuplicateComponentIsScaleInvariant) {
  const SimplifiedDmaSpec s{0.3, 1.0, 3};
  const auto once = AnalyticPattern::Combine({s});
  const auto twice = AnalyticPattern::Combine({s, s});
  for (int i = 0; i < 360; ++i) EXPECT_NEAR(once.Evaluate(DegToRad(i)), twice.Evaluate(DegToRad(i)), 1e-14);
}

TEST(Combine, Errors) {
  EXPECT_THROW(AnalyticPattern::Combine({}), ValidationError);
  EXPECT_THROW(AnalyticPattern::Combine({GeneralDmaSpec{{0.0}, 0.0}}), DegeneratePatternError);
  EXPECT_THROW(AnalyticPattern::Combine({GeneralDmaSpec{{-1.0}, 0.0}}), DegeneratePatternError);
}

TEST(Combine, OrderInvariantAndBounded) {
  std::mt19937_64 rng(3);
  RecipeConfig cfg;
  cfg.recipe = Recipe::kBplus;
  for (int k = 0; k < 200; ++k) {
    const auto p = GenRecipe(cfg, rng);
    auto reversed = p.components();
    std::reverse(reversed.begin(), reversed.end());
    const auto q = AnalyticPattern::Combine(reversed);
    for (int i = 0; i < 72; ++i) {
      const double th = DegToRad(5.0 * i + 0.7);
      EXPECT_NEAR(p.Evaluate(th), q.Evaluate(th), 1e-12);
      EXPECT_GE(p.Evaluate(th), 0.0);
      EXPECT_LE(p.Evaluate(th), 1.0);
      EXPECT_GE(p.EvaluateFloored(th), 0.1 - 1e-15);
    }
  }
}

TEST(Floor, Examples) {
  EXPECT_NEAR(ApplyFloor(0.0, -20.0), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(ApplyFloor(0.5, -20.0), 0.5);
  EXPECT_NEAR(ApplyFloor(0.1, -20.0), 0.1, 1e-15);
  EXPECT_THROW(ApplyFloor(0.5, 3.0), ValidationError);
  const std::vector<double> g{0.0, 0.05, 0.7};
  const auto out = ApplyFloor(g, -20.0);
  EXPECT_NEAR(out[0], 0.1, 1e-15);
  EXPECT_NEAR(out[1], 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(out[2], 0.7);
}

TEST(SamplePattern, Omni) {
  const auto v = SamplePattern(AnalyticPattern::Omni(), 72);
  ASSERT_EQ(v.length(), 72);
  for (double g : v.gains) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(SamplePattern, CardioidFourPoints) {
  const auto v = SamplePattern(AnalyticPattern::Cardioid(0.0), 4);
  ASSERT_EQ(v.length(), 4);
  EXPECT_NEAR(v.gains[0], 1.0, 1e-15);
  EXPECT_NEAR(v.gains[1], 0.5, 1e-15);
  EXPECT_NEAR(v.gains[2], 0.1, 1e-15);
  EXPECT_NEAR(v.gains[3], 0.5, 1e-15);
}

TEST(SamplePattern, AnglesOnFiveDegreeGrid) {
  const auto v = SamplePattern(AnalyticPattern::Omni(), 72);
  for (int i = 0; i < 72; ++i) EXPECT_NEAR(RadToDeg(v.AngleOf(i)), 5.0 * i, 1e-12);
  EXPECT_THROW(SamplePattern(AnalyticPattern::Omni(), 3), ValidationError);
}

TEST(InterpPattern, ExactAtSamplesAndLinearBetween) {
  const auto p = AnalyticPattern::Cardioid(DegToRad(40.0), 0.3, 2);
  const auto v = SamplePattern(p, 72);
  for (int i = 0; i < 72; ++i) EXPECT_EQ(InterpPattern(v, v.AngleOf(i)), v.gains[i]);
  PatternVector two{{1.0, 0.5}};
  EXPECT_DOUBLE_EQ(InterpPattern(two, kPi / 2.0), 0.75);
  PatternVector constant{std::vector<double>(72, 0.3)};
  for (int k = 0; k < 100; ++k) EXPECT_NEAR(InterpPattern(constant, 0.0731 * k), 0.3, 1e-15);
}

TEST(InterpPattern, WrapsBetweenLastAndFirst) {
  PatternVector v{{1.0, 0.0, 0.0, 0.5}};
  // between index 3 (270 deg) and index 0 (360 deg)
  EXPECT_DOUBLE_EQ(InterpPattern(v, DegToRad(315.0)), 0.75);
}

TEST(RecipeA, SixtyDistinctFirstOrder) {
  const auto patterns = GenRecipeA();
  ASSERT_EQ(patterns.size(), 60u);
  std::set<std::tuple<double, double, int>> specs;
  std::set<long> steering;
  for (const auto& p : patterns) {
    ASSERT_EQ(p.components().size(), 1u);
    const auto& s = std::get<SimplifiedDmaSpec>(p.components().front());
    EXPECT_EQ(s.order_j, 1);
    specs.insert({s.mu, s.theta_s, s.order_j});
    steering.insert(std::lround(RadToDeg(s.theta_s)));
  }
  EXPECT_EQ(specs.size(), 60u);
  EXPECT_EQ(steering, (std::set<long>{0, 60, 120, 180, 240, 300}));
}

TEST(Recipe, SameSeedSamePattern) {
  for (Recipe r : {Recipe::kBminus, Recipe::kB, Recipe::kBplus}) {
    RecipeConfig cfg;
    cfg.recipe = r;
    std::mt19937_64 a(11);
    std::mt19937_64 b(11);
    const auto pa = GenRecipe(cfg, a);
    const auto pb = GenRecipe(cfg, b);
    ASSERT_EQ(pa.components().size(), pb.components().size());
    for (int i = 0; i < 720; ++i) EXPECT_EQ(pa.Evaluate(kTwoPi * i / 720), pb.Evaluate(kTwoPi * i / 720));
  }
}

TEST(Recipe, BminusHasOneDmaComponent) {
  RecipeConfig cfg;
  cfg.recipe = Recipe::kBminus;
  std::mt19937_64 rng(5);
  for (int k = 0; k < 500; ++k) {
    const auto p = GenRecipe(cfg, rng);
    ASSERT_EQ(p.components().size(), 1u);
    const auto& s = std::get<SimplifiedDmaSpec>(p.components().front());
    EXPECT_GE(s.order_j, 1);
    EXPECT_LE(s.order_j, 11);
    EXPECT_NEAR(s.mu * 10.0, std::round(s.mu * 10.0), 1e-12);
    EXPECT_LE(s.mu, 0.9 + 1e-12);
  }
}

double GridMax(const AnalyticPattern& p) {
  double m = 0.0;
  for (int i = 0; i < 720; ++i) m = std::max(m, p.Evaluate(kTwoPi * i / 720));
  return m;
}

TEST(Recipe, BDrawsAreMaxNormalized) {
  RecipeConfig cfg;
  cfg.recipe = Recipe::kB;
  std::mt19937_64 rng(6);
  std::set<std::size_t> counts;
  for (int k = 0; k < 10000; ++k) {
    const auto p = GenRecipe(cfg, rng);
    counts.insert(p.components().size());
    ASSERT_NEAR(GridMax(p), 1.0, 1e-9);
  }
  EXPECT_EQ(counts, (std::set<std::size_t>{1, 2, 3, 4}));
}

TEST(Recipe, BplusCoversAllThreeBranches) {
  RecipeConfig cfg;
  cfg.recipe = Recipe::kBplus;
  std::mt19937_64 rng(8);
  int dma_only = 0;
  int rect_only = 0;
  int mixed = 0;
  for (int k = 0; k < 3000; ++k) {
    const auto p = GenRecipe(cfg, rng);
    ASSERT_NEAR(GridMax(p), 1.0, 1e-9);
    bool has_dma = false;
    bool has_rect = false;
    for (const auto& c : p.components()) {
      has_dma = has_dma || std::holds_alternative<SimplifiedDmaSpec>(c);
      has_rect = has_rect || std::holds_alternative<RectSpec>(c);
    }
    dma_only += has_dma && !has_rect;
    rect_only += has_rect && !has_dma;
    mixed += has_dma && has_rect;
  }
  // each branch has probability 1/3
  EXPECT_NEAR(dma_only / 3000.0, 1.0 / 3.0, 0.04);
  EXPECT_NEAR(rect_only / 3000.0, 1.0 / 3.0, 0.04);
  EXPECT_NEAR(mixed / 3000.0, 1.0 / 3.0, 0.04);
}

TEST(Recipe, ParseNames) {
  EXPECT_EQ(ParseRecipe("a"), Recipe::kA);
  EXPECT_EQ(ParseRecipe("B+"), Recipe::kBplus);
  EXPECT_EQ(ParseRecipe("bminus"), Recipe::kBminus);
  EXPECT_THROW(ParseRecipe("c"), ValidationError);
}

TEST(GainAt, AnalyticIsFlooredVectorIsInterpolated) {
  const auto card = AnalyticPattern::Cardioid(0.0);
  EXPECT_NEAR(GainAt(card, kPi), 0.1, 1e-15);
  EXPECT_NEAR(GainAt(SamplePattern(card, 72), DegToRad(2.5)),
              0.5 * (1.0 + EvalSimplifiedDma({0.5, 0.0, 1}, DegToRad(5.0))), 1e-15);
}

}  // namespace
}  // namespace undf
