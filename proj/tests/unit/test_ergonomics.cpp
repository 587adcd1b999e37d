#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ergocam/ergonomics.hpp"
#include "ergocam/skeleton_sim.hpp"
#include "oracles.hpp"

using namespace ergocam;

namespace {

/// Upright operator with both arms hanging straight, built by hand.
LandmarkFrame straight_standing() {
  LandmarkFrame f;
  const double hy = 0.17, sy = 0.22;
  f.set(Landmark::kLeftAnkle, {0, hy, 0});
  f.set(Landmark::kRightAnkle, {0, -hy, 0});
  f.set(Landmark::kLeftKnee, {0, hy, 0.5});
  f.set(Landmark::kRightKnee, {0, -hy, 0.5});
  f.set(Landmark::kLeftHip, {0, hy, 0.93});
  f.set(Landmark::kRightHip, {0, -hy, 0.93});
  f.set(Landmark::kLeftShoulder, {0, sy, 1.43});
  f.set(Landmark::kRightShoulder, {0, -sy, 1.43});
  f.set(Landmark::kLeftElbow, {0, sy, 1.1});
  f.set(Landmark::kRightElbow, {0, -sy, 1.1});
  f.set(Landmark::kLeftWrist, {0, sy, 0.85});
  f.set(Landmark::kRightWrist, {0, -sy, 0.85});
  f.set(Landmark::kMidEar, {0, 0, 1.63});
  return f;
}

JointAngles angles(double ua, double la, double neck, double trunk) {
  JointAngles a;
  a.upper_arm_flexion = {ua, ua};
  a.lower_arm_flexion = {la, la};
  a.neck_flexion = neck;
  a.trunk_flexion = trunk;
  return a;
}

}  // namespace

TEST(JointAngles, UprightStandingIsZero) {
  const JointAngles a = compute_joint_angles(straight_standing());
  for (int s = 0; s < 2; ++s) {
    EXPECT_NEAR(a.upper_arm_flexion[static_cast<std::size_t>(s)], 0, 1e-6);
    EXPECT_NEAR(a.lower_arm_flexion[static_cast<std::size_t>(s)], 0, 1e-6);
  }
  EXPECT_NEAR(a.neck_flexion, 0, 1e-6);
  EXPECT_NEAR(a.trunk_flexion, 0, 1e-6);
  EXPECT_TRUE(a.legs_supported);
  EXPECT_TRUE(a.neck_measured);
}

TEST(JointAngles, ArmRaisedForwardIsNinety) {
  LandmarkFrame f = straight_standing();
  f.set(Landmark::kRightElbow, f.at(Landmark::kRightShoulder) + Eigen::Vector3d(0.33, 0, 0));
  f.set(Landmark::kRightWrist, f.at(Landmark::kRightShoulder) + Eigen::Vector3d(0.58, 0, 0));
  const JointAngles a = compute_joint_angles(f);
  EXPECT_NEAR(a.upper_arm_flexion[kRight], 90, 1e-6);
  EXPECT_NEAR(a.lower_arm_flexion[kRight], 0, 1e-6);
}

TEST(JointAngles, ArmRaisedBackwardIsNegative) {
  LandmarkFrame f = straight_standing();
  f.set(Landmark::kLeftElbow, f.at(Landmark::kLeftShoulder) + 0.33 * Eigen::Vector3d(-0.5, 0, -std::sqrt(0.75)));
  EXPECT_NEAR(compute_joint_angles(f).upper_arm_flexion[kLeft], -30, 1e-6);
}

TEST(JointAngles, MissingLandmarksListed) {
  LandmarkFrame f = straight_standing();
  f.clear(index_of(Landmark::kLeftKnee));
  f.clear(index_of(Landmark::kRightWrist));
  try {
    compute_joint_angles(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncompleteFrame);
    EXPECT_NE(std::string(e.what()).find("left_knee"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("right_wrist"), std::string::npos);
  }
}

TEST(JointAngles, MissingHeadMarkersFlagNeck) {
  LandmarkFrame f = straight_standing();
  f.clear(index_of(Landmark::kMidEar));
  const JointAngles a = compute_joint_angles(f);
  EXPECT_FALSE(a.neck_measured);
  EXPECT_EQ(a.neck_flexion, 0);
}

TEST(JointAngles, RaisedFootIsUnsupported) {
  LandmarkFrame f = straight_standing();
  f.set(Landmark::kLeftAnkle, {0, 0.17, 0.2});
  EXPECT_FALSE(compute_joint_angles(f).legs_supported);
}

TEST(JointAngles, MatchesDotProductOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  for (int k = 0; k < 500; ++k) {
    LandmarkFrame f = straight_standing();
    for (int i = 0; i < kLandmarkCount; ++i) {
      if (!f.present[static_cast<std::size_t>(i)]) continue;
      f.set(i, f.positions.row(i).transpose() + Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng)));
    }
    const JointAngles a = compute_joint_angles(f);
    const Eigen::Vector3d hip_mid = (f.at(Landmark::kLeftHip) + f.at(Landmark::kRightHip)) / 2;
    const Eigen::Vector3d sh_mid = (f.at(Landmark::kLeftShoulder) + f.at(Landmark::kRightShoulder)) / 2;
    const auto up = oracle::sub(sh_mid, hip_mid);
    const std::array<double, 3> down{-up[0], -up[1], -up[2]};
    EXPECT_NEAR(a.trunk_flexion, oracle::angle_deg(up, {0, 0, 1}), 1e-9);
    const Landmark sh[2] = {Landmark::kLeftShoulder, Landmark::kRightShoulder};
    const Landmark el[2] = {Landmark::kLeftElbow, Landmark::kRightElbow};
    const Landmark wr[2] = {Landmark::kLeftWrist, Landmark::kRightWrist};
    for (int s = 0; s < 2; ++s) {
      const auto i = static_cast<std::size_t>(s);
      EXPECT_NEAR(std::abs(a.upper_arm_flexion[i]), oracle::angle_deg(oracle::sub(f.at(el[s]), f.at(sh[s])), down),
                  1e-9);
      EXPECT_NEAR(a.lower_arm_flexion[i],
                  180 - oracle::angle_deg(oracle::sub(f.at(sh[s]), f.at(el[s])), oracle::sub(f.at(wr[s]), f.at(el[s]))),
                  1e-9);
    }
    EXPECT_NEAR(std::abs(a.neck_flexion), oracle::angle_deg(oracle::sub(f.at(Landmark::kMidEar), sh_mid), up), 1e-9);
  }
}

// ---------------------------------------------------------------- scoring

TEST(RulaScore, AllMinimalIsOne) {
  EXPECT_EQ(rula_grand_from_steps({}), 1);
  const RulaBreakdown r = rula_score(angles(0, 80, 5, 0));
  EXPECT_EQ(r.grand, 1);
  EXPECT_EQ(r.action_level, 1);
}

TEST(RulaScore, WorksheetExampleIsFour) {
  const RulaBreakdown r = rula_score(angles(50, 80, 15, 25));
  EXPECT_EQ(r.score_upper_arm, 3);
  EXPECT_EQ(r.score_lower_arm, 1);
  EXPECT_EQ(r.score_wrist, 1);
  EXPECT_EQ(r.table_a, 3);
  EXPECT_EQ(r.score_neck, 2);
  EXPECT_EQ(r.score_trunk, 3);
  EXPECT_EQ(r.table_b, 4);
  EXPECT_EQ(r.grand, 4);
}

TEST(RulaScore, WorstBandsAreSeven) {
  JointAngles a = angles(120, 150, -30, 80);
  a.legs_supported = false;
  RulaAdjustments adj;
  adj.wrist_flexion_deg = 40;
  adj.wrist_twist = 2;
  const RulaBreakdown r = rula_score(a, adj);
  EXPECT_EQ(r.score_upper_arm, 4);
  EXPECT_EQ(r.score_neck, 4);
  EXPECT_EQ(r.score_trunk, 4);
  EXPECT_EQ(r.grand, 7);
  EXPECT_EQ(r.action_level, 4);
  RulaSteps worst{6, 3, 4, 2, 6, 6, 2};
  EXPECT_EQ(rula_grand_from_steps(worst, {1, 1, 3, 3}), 7);
}

TEST(RulaScore, StepBands) {
  EXPECT_EQ(score_upper_arm(-21), 2);
  EXPECT_EQ(score_upper_arm(-20), 1);
  EXPECT_EQ(score_upper_arm(20), 1);
  EXPECT_EQ(score_upper_arm(20.01), 2);
  EXPECT_EQ(score_upper_arm(45), 2);
  EXPECT_EQ(score_upper_arm(90), 3);
  EXPECT_EQ(score_upper_arm(90.01), 4);
  EXPECT_EQ(score_lower_arm(59.9), 2);
  EXPECT_EQ(score_lower_arm(60), 1);
  EXPECT_EQ(score_lower_arm(100), 1);
  EXPECT_EQ(score_lower_arm(100.1), 2);
  EXPECT_EQ(score_wrist(0), 1);
  EXPECT_EQ(score_wrist(-15), 2);
  EXPECT_EQ(score_wrist(16), 3);
  EXPECT_EQ(score_neck(-5), 1);
  EXPECT_EQ(score_neck(-5.1), 4);
  EXPECT_EQ(score_neck(10), 1);
  EXPECT_EQ(score_neck(20), 2);
  EXPECT_EQ(score_neck(20.1), 3);
  EXPECT_EQ(score_trunk(5), 1);
  EXPECT_EQ(score_trunk(5.1), 2);
  EXPECT_EQ(score_trunk(20), 2);
  EXPECT_EQ(score_trunk(60), 3);
  EXPECT_EQ(score_trunk(61), 4);
  EXPECT_EQ(score_legs(true), 1);
  EXPECT_EQ(score_legs(false), 2);
}

TEST(RulaScore, TableLookupsRejectOutOfRange) {
  EXPECT_THROW(rula_table_a(7, 1, 1, 1), Error);
  EXPECT_THROW(rula_table_b(1, 0, 1), Error);
  EXPECT_THROW(rula_table_c(0, 1), Error);
  EXPECT_EQ(rula_table_c(12, 12), 7);
}

TEST(RulaScore, BothSidesScoredAndMaxReported) {
  JointAngles a = angles(0, 80, 0, 0);
  a.upper_arm_flexion[kLeft] = 100;
  const RulaBreakdown r = rula_score(a);
  EXPECT_EQ(r.governing, kLeft);
  EXPECT_EQ(r.grand, std::max(r.sides[kLeft].grand, r.sides[kRight].grand));
  EXPECT_GT(r.sides[kLeft].grand, r.sides[kRight].grand);
  EXPECT_EQ(r.score_upper_arm, 4);
}

TEST(ClassifyPosture, ActionLevelBands) {
  EXPECT_EQ(classify_posture(1).status, PostureLevel::kSafe);
  EXPECT_EQ(classify_posture(4).status, PostureLevel::kWarn);
  EXPECT_EQ(classify_posture(4).message, "posture may need investigation");
  EXPECT_EQ(classify_posture(7).status, PostureLevel::kUnsafe);
  EXPECT_EQ(classify_posture(7).message, "change posture now");
}

TEST(ClassifyPosture, ConstantOnBandsAndNonDecreasing) {
  int prev = -1;
  for (int g = 1; g <= 7; ++g) {
    const auto s = classify_posture(g);
    EXPECT_GE(static_cast<int>(s.status), prev);
    prev = static_cast<int>(s.status);
  }
  EXPECT_EQ(classify_posture(1).message, classify_posture(2).message);
  EXPECT_EQ(classify_posture(3).message, classify_posture(4).message);
  EXPECT_EQ(classify_posture(5).message, classify_posture(7).message);
}

TEST(AreaScores, ConstantSequence) {
  const RulaBreakdown r = rula_score(angles(50, 80, 15, 25));
  const std::vector<RulaBreakdown> seq(5, r);
  const AreaScores m = area_scores(seq);
  EXPECT_EQ(m.upper_arms, 3);
  EXPECT_EQ(m.neck, 2);
  EXPECT_EQ(m.trunk, 3);
}

TEST(AreaScores, TwoFrameNeckMean) {
  std::vector<RulaBreakdown> seq{rula_score(angles(0, 80, 0, 0)), rula_score(angles(0, 80, 30, 0))};
  EXPECT_EQ(seq[0].score_neck, 1);
  EXPECT_EQ(seq[1].score_neck, 3);
  EXPECT_DOUBLE_EQ(area_scores(seq).neck, 2.0);
}

TEST(AreaScores, MatchesTwoPassMean) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-30, 150);
  std::vector<RulaBreakdown> seq;
  for (int k = 0; k < 257; ++k) seq.push_back(rula_score(angles(u(rng), u(rng), u(rng) / 3, u(rng) / 2)));
  const auto got = as_array(area_scores(seq));
  // Pass one sums, pass two corrects the mean by the average residual.
  for (std::size_t area = 0; area < 6; ++area) {
    const auto value = [&](const RulaBreakdown& r) {
      const int v[6] = {r.score_upper_arm, r.score_lower_arm, r.score_wrist, r.score_neck, r.score_trunk, r.score_legs};
      return static_cast<double>(v[area]);
    };
    double mean = 0;
    for (const auto& r : seq) mean += value(r);
    mean /= static_cast<double>(seq.size());
    double corr = 0;
    for (const auto& r : seq) corr += value(r) - mean;
    mean += corr / static_cast<double>(seq.size());
    EXPECT_NEAR(got[area], mean, 1e-12) << kAreaNames[area];
  }
}

TEST(AreaScores, EmptyRejected) {
  try {
    area_scores(std::vector<RulaBreakdown>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
}

TEST(JointStress, Values) {
  EXPECT_EQ(joint_stress(JointAngles{}), StressRow{});
  JointAngles a;
  a.upper_arm_flexion[kRight] = 90;
  a.upper_arm_flexion[kLeft] = 45;
  const StressRow r = joint_stress(a);
  EXPECT_DOUBLE_EQ(r[static_cast<std::size_t>(StressJoint::kRightUpperArm)], 1.0);
  EXPECT_DOUBLE_EQ(r[static_cast<std::size_t>(StressJoint::kLeftUpperArm)], 0.5);
  a.trunk_flexion = 200;
  EXPECT_EQ(joint_stress(a)[static_cast<std::size_t>(StressJoint::kTrunk)], 1.0);
  EXPECT_THROW(joint_stress_heatmap(std::vector<JointAngles>{}), Error);
}

// Properties --------------------------------------------------------------

TEST(RulaProperty, MonotoneInEachAngleOverMonotoneRanges) {
  // Upper arm from 0, lower arm from 100, neck and trunk from 0: on these
  // ranges every band function is non-decreasing.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ua(0, 180), la(100, 180), nk(0, 80), tr(0, 90), step(0, 60);
  for (int k = 0; k < 10000; ++k) {
    const JointAngles base = angles(ua(rng), la(rng), nk(rng), tr(rng));
    const int g0 = rula_score(base).grand;
    for (int which = 0; which < 4; ++which) {
      JointAngles up = base;
      const double d = step(rng);
      if (which == 0) up.upper_arm_flexion[kRight] += d;
      if (which == 1) up.lower_arm_flexion[kLeft] += d;
      if (which == 2) up.neck_flexion += d;
      if (which == 3) up.trunk_flexion += d;
      ASSERT_GE(rula_score(up).grand, g0) << "angle " << which << " k " << k;
    }
  }
}

TEST(RulaProperty, MonotoneInEachStepScore) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> s6(1, 6), s3(1, 3), s4(1, 4), s2(1, 2);
  for (int k = 0; k < 10000; ++k) {
    const RulaSteps s{s6(rng), s3(rng), s4(rng), s2(rng), s6(rng), s6(rng), s2(rng)};
    const int g = rula_grand_from_steps(s);
    EXPECT_GE(g, 1);
    EXPECT_LE(g, 7);
    const int* fields[7] = {&s.upper_arm, &s.lower_arm, &s.wrist, &s.wrist_twist, &s.neck, &s.trunk, &s.legs};
    const int maxima[7] = {6, 3, 4, 2, 6, 6, 2};
    for (int f = 0; f < 7; ++f) {
      if (*fields[f] == maxima[f]) continue;
      RulaSteps t = s;
      int* tf[7] = {&t.upper_arm, &t.lower_arm, &t.wrist, &t.wrist_twist, &t.neck, &t.trunk, &t.legs};
      ++*tf[f];
      ASSERT_GE(rula_grand_from_steps(t), g);
    }
  }
}

TEST(RulaProperty, SideSymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-40, 170);
  for (int k = 0; k < 10000; ++k) {
    JointAngles a;
    a.upper_arm_flexion = {u(rng), u(rng)};
    a.lower_arm_flexion = {u(rng), u(rng)};
    a.neck_flexion = u(rng) / 3;
    a.trunk_flexion = std::abs(u(rng)) / 2;
    JointAngles m = a;
    std::swap(m.upper_arm_flexion[0], m.upper_arm_flexion[1]);
    std::swap(m.lower_arm_flexion[0], m.lower_arm_flexion[1]);
    ASSERT_EQ(rula_score(a).grand, rula_score(m).grand);
  }
}

TEST(RulaProperty, MirroredFrameScoresTheSame) {
  const auto p = build_skeleton(1.75);
  const auto seq = animate(p, default_reach_task(), Eigen::Vector3d(0.5, -0.227, 1.1));
  const std::pair<Landmark, Landmark> pairs[] = {
      {Landmark::kLeftShoulder, Landmark::kRightShoulder}, {Landmark::kLeftElbow, Landmark::kRightElbow},
      {Landmark::kLeftWrist, Landmark::kRightWrist},       {Landmark::kLeftHip, Landmark::kRightHip},
      {Landmark::kLeftKnee, Landmark::kRightKnee},         {Landmark::kLeftAnkle, Landmark::kRightAnkle}};
  for (const auto& f : seq.frames) {
    LandmarkFrame m = f;
    for (int i = 0; i < kLandmarkCount; ++i) m.positions(i, 1) = -f.positions(i, 1);
    for (const auto& [l, r] : pairs) m.positions.row(index_of(l)).swap(m.positions.row(index_of(r)));
    const JointAngles a = compute_joint_angles(f), b = compute_joint_angles(m);
    EXPECT_EQ(rula_score(a).grand, rula_score(b).grand);
    EXPECT_NEAR(a.upper_arm_flexion[kRight], b.upper_arm_flexion[kLeft], 1e-9);
  }
}

TEST(RulaProperty, Deterministic) {
  const auto f = pose_skeleton(build_skeleton(1.7), {20, 10}, nullptr).frame;
  const auto a = rula_score(compute_joint_angles(f));
  const auto b = rula_score(compute_joint_angles(f));
  EXPECT_EQ(a.grand, b.grand);
  EXPECT_EQ(a.table_a, b.table_a);
  EXPECT_EQ(a.table_b, b.table_b);
}
