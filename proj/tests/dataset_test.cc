#include <gtest/gtest.h>

#include "test_util.h"
#include "undf/dataset.h"
#include "undf/errors.h"

namespace undf {
namespace {

RenderedScene SmallScene() {
  SceneSpec spec;
  spec.duration = 0.25;
  spec.sources.push_back({DegToRad(40.0), 1.5, testing::RandomSignal(spec.num_samples(), 1)});
  spec.sources.push_back({DegToRad(250.0), 1.5, testing::RandomSignal(spec.num_samples(), 2)});
  return RenderMics(spec, BuildDefaultArray());
}

TEST(ConditioningVector, SamplesAnalyticAndResamplesVectors) {
  const auto card = AnalyticPattern::Cardioid(0.0);
  const auto v = ConditioningVector(card, 72);
  EXPECT_EQ(v.gains, SamplePattern(card, 72).gains);
  const auto half = ConditioningVector(SamplePattern(card, 72), 36);
  ASSERT_EQ(half.length(), 36);
  for (int i = 0; i < 36; ++i) EXPECT_NEAR(half.gains[i], v.gains[2 * i], 1e-15);
}

TEST(MakeExample, ShapesAndTarget) {
  const StftConfig cfg{16000, 128, 64};
  const auto scene = SmallScene();
  const auto card = AnalyticPattern::Cardioid(DegToRad(40.0));
  const auto ex = MakeExample(scene, {card}, 72, cfg);
  EXPECT_EQ(ex.features.channels, 8);
  EXPECT_EQ(ex.features.bins, 65);
  EXPECT_EQ(ex.features.frames, ex.reference.frames());
  ASSERT_EQ(ex.patterns.size(), 1u);
  EXPECT_EQ(ex.target, RenderTarget(scene, {card}, cfg));
  EXPECT_THROW(MakeExample(scene, {}, 72, cfg), ValidationError);
  const std::vector<GainPattern> two(2, card);
  EXPECT_THROW(MakeExample(scene, two, 72, cfg), ValidationError);
}

TEST(Timeline, ExpandsPerFrame) {
  const GainPattern a = AnalyticPattern::Omni();
  const GainPattern b = AnalyticPattern::Cardioid(0.0);
  const auto one = ExpandTimeline({{0, a}}, 10);
  EXPECT_EQ(one.size(), 1u);
  const auto seq = ExpandTimeline({{0, a}, {4, b}, {7, a}}, 10);
  ASSERT_EQ(seq.size(), 10u);
  for (int t = 0; t < 10; ++t) {
    const bool expect_b = t >= 4 && t < 7;
    EXPECT_EQ(std::holds_alternative<AnalyticPattern>(seq[t]), true);
    EXPECT_EQ(std::get<AnalyticPattern>(seq[t]).components().size(), 1u);
    EXPECT_NEAR(GainAt(seq[t], kPi), expect_b ? 0.1 : 1.0, 1e-15) << t;
  }
}

TEST(Timeline, Validation) {
  const GainPattern a = AnalyticPattern::Omni();
  EXPECT_THROW(ValidateTimeline({}), ValidationError);
  EXPECT_THROW(ValidateTimeline({{1, a}}), ValidationError);
  EXPECT_THROW(ValidateTimeline({{0, a}, {5, a}, {5, a}}), ValidationError);
  EXPECT_THROW(ValidateTimeline({{0, a}, {5, a}, {3, a}}), ValidationError);
  EXPECT_NO_THROW(ValidateTimeline({{0, a}, {5, a}}));
}

}  // namespace
}  // namespace undf
