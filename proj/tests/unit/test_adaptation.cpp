#include <gtest/gtest.h>

#include "ergocam/adaptation.hpp"
#include "ergocam/pipeline.hpp"
#include "ergocam/skeleton_sim.hpp"

using namespace ergocam;

namespace {

std::vector<LandmarkFrame> standing_frames(double stature, int n, Posture posture = {}) {
  const auto p = build_skeleton(stature);
  return std::vector<LandmarkFrame>(static_cast<std::size_t>(n), pose_skeleton(p, posture, nullptr).frame);
}

}  // namespace

TEST(EstimateHeight, NoiselessOperator) {
  for (double h : {1.55, 1.75, 1.95}) EXPECT_NEAR(estimate_height(standing_frames(h, 12)), h, 1e-6);
}

TEST(EstimateHeight, NoisyPipelineWithinTwoCentimeters) {
  // 100 noisy fused frames (warm-up extended to 10 s).
  Scenario s = default_scenario();
  s.warmup_s = 10.0;
  s.statures = {1.75};
  const RunResult r = run_scenario(s, 3);
  EXPECT_EQ(r.adaptation.upright_frames, 100);
  EXPECT_NEAR(r.adaptation.estimated_height, 1.75, 0.02);
}

TEST(EstimateHeight, MedianResistsOutliers) {
  auto frames = standing_frames(1.75, 11);
  for (int k = 0; k < 4; ++k) frames[static_cast<std::size_t>(k)].set(Landmark::kHeadTop, Eigen::Vector3d(0, 0, 3.0));
  EXPECT_NEAR(estimate_height(frames), 1.75, 1e-6);
}

TEST(EstimateHeight, BentOverFramesRejected) {
  try {
    estimate_height(standing_frames(1.75, 50, {30, 10}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(EstimateHeight, NineUprightFramesAreNotEnough) {
  EXPECT_THROW(estimate_height(standing_frames(1.75, 9)), Error);
  EXPECT_NO_THROW(estimate_height(standing_frames(1.75, 10)));
}

TEST(ClassifyHeight, Bands) {
  EXPECT_EQ(classify_height(1.60), AnthropometricClass::kC1);
  EXPECT_EQ(classify_height(1.6799999), AnthropometricClass::kC1);
  EXPECT_EQ(classify_height(1.68), AnthropometricClass::kC2);
  EXPECT_EQ(classify_height(1.82), AnthropometricClass::kC2);
  EXPECT_EQ(classify_height(1.8200001), AnthropometricClass::kC3);
  EXPECT_EQ(classify_height(1.83), AnthropometricClass::kC3);
}

TEST(ClassifyHeight, NonPositiveRejected) {
  for (double h : {0.0, -1.7}) {
    try {
      classify_height(h);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kValidation);
    }
  }
}

TEST(ClassifyHeight, Totality) {
  for (double h = 0.01; h < 3.0; h += 0.001) {
    const auto c = classify_height(h);
    int hits = 0;
    for (auto k : {AnthropometricClass::kC1, AnthropometricClass::kC2, AnthropometricClass::kC3}) {
      const auto b = bounds(k);
      const bool in = k == AnthropometricClass::kC2 ? (h >= b.lower && h <= b.upper)
                      : k == AnthropometricClass::kC1 ? h < b.upper
                                                      : h > b.lower;
      hits += in;
      if (in) EXPECT_EQ(k, c);
    }
    EXPECT_EQ(hits, 1);
  }
}

TEST(AdaptRobot, DeliveryHeights) {
  RobotDeliveryParams d;
  d.delivery_point = Eigen::Vector3d(0.5, -0.227, 1.2);
  const auto c2 = adapt_robot(AnthropometricClass::kC2, d);
  EXPECT_NEAR(c2.delivery_point.z(), 1.4315, 1e-12);
  EXPECT_EQ(c2.delivery_point.head<2>(), d.delivery_point.head<2>());
  EXPECT_TRUE(c2.adapted);
  EXPECT_EQ(c2.source_class, AnthropometricClass::kC2);
  EXPECT_NEAR(adapt_robot(AnthropometricClass::kC1, d).delivery_point.z(), 1.3088, 1e-12);
  EXPECT_NEAR(adapt_robot(AnthropometricClass::kC3, d).delivery_point.z(), 1.5542, 1e-12);
}

TEST(AdaptRobot, SecondAdaptationRejected) {
  RobotDeliveryParams d;
  d.adapted = true;
  try {
    adapt_robot(AnthropometricClass::kC1, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleAdaptationViolation);
  }
}

TEST(AdaptationController, SingleShot) {
  AdaptationController ctl(RobotDeliveryParams{Eigen::Vector3d(0.5, 0, 1.3), false, std::nullopt});
  EXPECT_FALSE(ctl.params().adapted);
  ctl.apply(AnthropometricClass::kC3);
  EXPECT_TRUE(ctl.params().adapted);
  EXPECT_THROW(ctl.apply(AnthropometricClass::kC1), Error);
  EXPECT_EQ(ctl.params().source_class, AnthropometricClass::kC3);
}
