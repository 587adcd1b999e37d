#include "ergocam/ergonomics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "ergocam/error.hpp"

namespace ergocam {

namespace {

constexpr double kRad2Deg = 180.0 / std::numbers::pi;

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0)) * kRad2Deg;
}

double signed_angle_deg(const Eigen::Vector3d& v, const Eigen::Vector3d& ref,
                        const Eigen::Vector3d& forward) {
  const double a = angle_deg(v, ref);
  return v.dot(forward) >= 0 ? a : -a;
}

}  // namespace

JointAngles compute_joint_angles(const LandmarkFrame& frame) {
  std::string missing;
  for (int i = 0; i < kFusedLandmarkCount; ++i) {
    if (!frame.present[static_cast<std::size_t>(i)]) {
      missing += (missing.empty() ? "" : ", ") + std::string(landmark_name(i));
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kIncompleteFrame, "compute_joint_angles: missing " + missing);
  }

  const Eigen::Vector3d hip_mid = 0.5 * (frame.at(Landmark::kLeftHip) + frame.at(Landmark::kRightHip));
  const Eigen::Vector3d shoulder_mid =
      0.5 * (frame.at(Landmark::kLeftShoulder) + frame.at(Landmark::kRightShoulder));
  const Eigen::Vector3d up = (shoulder_mid - hip_mid).normalized();
  const Eigen::Vector3d lateral = frame.at(Landmark::kLeftHip) - frame.at(Landmark::kRightHip);
  const Eigen::Vector3d forward = lateral.cross(up).normalized();

  JointAngles out;
  out.trunk_flexion = angle_deg(up, Eigen::Vector3d::UnitZ());

  constexpr Landmark shoulders[2] = {Landmark::kLeftShoulder, Landmark::kRightShoulder};
  constexpr Landmark elbows[2] = {Landmark::kLeftElbow, Landmark::kRightElbow};
  constexpr Landmark wrists[2] = {Landmark::kLeftWrist, Landmark::kRightWrist};
  for (int s = 0; s < 2; ++s) {
    const Eigen::Vector3d sh = frame.at(shoulders[s]);
    const Eigen::Vector3d el = frame.at(elbows[s]);
    const Eigen::Vector3d wr = frame.at(wrists[s]);
    out.upper_arm_flexion[static_cast<std::size_t>(s)] = signed_angle_deg(el - sh, -up, forward);
    out.lower_arm_flexion[static_cast<std::size_t>(s)] = 180.0 - angle_deg(sh - el, wr - el);
  }

  if (frame.has(Landmark::kMidEar)) {
    out.neck_flexion = signed_angle_deg(frame.at(Landmark::kMidEar) - shoulder_mid, up, forward);
  } else {
    out.neck_measured = false;
  }

  out.legs_supported = std::abs(frame.at(Landmark::kLeftAnkle).z()) <= kGroundToleranceM &&
                       std::abs(frame.at(Landmark::kRightAnkle).z()) <= kGroundToleranceM;
  return out;
}

int score_upper_arm(double deg) {
  if (deg < -20) return 2;
  if (deg <= 20) return 1;
  if (deg <= 45) return 2;
  if (deg <= 90) return 3;
  return 4;
}

int score_lower_arm(double deg) { return (deg >= 60 && deg <= 100) ? 1 : 2; }

int score_wrist(double deg) {
  const double a = std::abs(deg);
  if (a == 0) return 1;
  return a <= 15 ? 2 : 3;
}

int score_neck(double deg) {
  if (deg < kNeckExtensionDeg) return 4;
  if (deg <= 10) return 1;
  if (deg <= 20) return 2;
  return 3;
}

int score_trunk(double deg) {
  const double a = std::abs(deg);
  if (a <= kTrunkUprightDeg) return 1;
  if (a <= 20) return 2;
  if (a <= 60) return 3;
  return 4;
}

int score_legs(bool supported) { return supported ? 1 : 2; }

int action_level(int grand) {
  if (grand <= 2) return 1;
  if (grand <= 4) return 2;
  if (grand <= 6) return 3;
  return 4;
}

int rula_grand_from_steps(const RulaSteps& s, const RulaAdjustments& adj) {
  const int a = rula_table_a(s.upper_arm, s.lower_arm, s.wrist, s.wrist_twist) + adj.muscle_use_a + adj.force_a;
  const int b = rula_table_b(s.neck, s.trunk, s.legs) + adj.muscle_use_b + adj.force_b;
  return rula_table_c(a, b);
}

RulaBreakdown rula_score(const JointAngles& angles, const RulaAdjustments& adj) {
  RulaBreakdown r;
  r.muscle_use_a = adj.muscle_use_a;
  r.muscle_use_b = adj.muscle_use_b;
  r.force_a = adj.force_a;
  r.force_b = adj.force_b;
  r.score_neck = score_neck(angles.neck_flexion);
  r.score_trunk = score_trunk(angles.trunk_flexion);
  r.score_legs = score_legs(angles.legs_supported);
  r.table_b = rula_table_b(r.score_neck, r.score_trunk, r.score_legs);
  r.neck_trunk_leg_score = r.table_b + adj.muscle_use_b + adj.force_b;

  for (int s = 0; s < 2; ++s) {
    const auto i = static_cast<std::size_t>(s);
    ArmScores& arm = r.sides[i];
    const double wrist_deg = adj.wrist_flexion_deg != 0 ? adj.wrist_flexion_deg : angles.wrist_flexion[i];
    arm.upper_arm = score_upper_arm(angles.upper_arm_flexion[i]);
    arm.lower_arm = score_lower_arm(angles.lower_arm_flexion[i]);
    arm.wrist = score_wrist(wrist_deg);
    arm.wrist_twist = adj.wrist_twist;
    arm.table_a = rula_table_a(arm.upper_arm, arm.lower_arm, arm.wrist, arm.wrist_twist);
    arm.wrist_arm_score = arm.table_a + adj.muscle_use_a + adj.force_a;
    arm.grand = rula_table_c(arm.wrist_arm_score, r.neck_trunk_leg_score);
  }

  const ArmScores& left = r.sides[kLeft];
  const ArmScores& right = r.sides[kRight];
  const bool left_governs =
      left.grand > right.grand || (left.grand == right.grand && left.wrist_arm_score > right.wrist_arm_score);
  r.governing = left_governs ? kLeft : kRight;
  const ArmScores& g = r.sides[static_cast<std::size_t>(r.governing)];
  r.score_upper_arm = g.upper_arm;
  r.score_lower_arm = g.lower_arm;
  r.score_wrist = g.wrist;
  r.score_wrist_twist = g.wrist_twist;
  r.table_a = g.table_a;
  r.wrist_arm_score = g.wrist_arm_score;
  r.grand = g.grand;
  r.action_level = action_level(r.grand);
  return r;
}

PostureStatus classify_posture(int grand) {
  if (grand <= 2) return {PostureLevel::kSafe, "posture is acceptable"};
  if (grand <= 4) return {PostureLevel::kWarn, "posture may need investigation"};
  return {PostureLevel::kUnsafe, "change posture now"};
}

PostureStatus classify_posture(const RulaBreakdown& breakdown) { return classify_posture(breakdown.grand); }

std::string_view to_string(PostureLevel level) {
  switch (level) {
    case PostureLevel::kSafe: return "SAFE";
    case PostureLevel::kWarn: return "WARN";
    case PostureLevel::kUnsafe: return "UNSAFE";
  }
  return "UNKNOWN";
}

std::array<double, 6> as_array(const AreaScores& a) {
  return {a.upper_arms, a.lower_arms, a.wrist, a.neck, a.trunk, a.legs};
}

AreaScores area_scores(std::span<const RulaBreakdown> sequence) {
  if (sequence.empty()) throw Error(ErrorCode::kValidation, "area_scores: empty sequence");
  AreaScores m;
  for (const auto& r : sequence) {
    m.upper_arms += r.score_upper_arm;
    m.lower_arms += r.score_lower_arm;
    m.wrist += r.score_wrist;
    m.neck += r.score_neck;
    m.trunk += r.score_trunk;
    m.legs += r.score_legs;
  }
  const double n = static_cast<double>(sequence.size());
  m.upper_arms /= n;
  m.lower_arms /= n;
  m.wrist /= n;
  m.neck /= n;
  m.trunk /= n;
  m.legs /= n;
  return m;
}

StressRow joint_stress(const JointAngles& a) {
  const auto norm = [](double deg, double lo, double hi) {
    return std::clamp((std::abs(deg) - lo) / (hi - lo), 0.0, 1.0);
  };
  StressRow row{};
  for (int s = 0; s < 2; ++s) {
    const auto i = static_cast<std::size_t>(s);
    row[static_cast<std::size_t>(StressJoint::kLeftUpperArm) + i] = norm(a.upper_arm_flexion[i], 0, 90);
    row[static_cast<std::size_t>(StressJoint::kLeftLowerArm) + i] = norm(a.lower_arm_flexion[i], 60, 100);
    row[static_cast<std::size_t>(StressJoint::kLeftWrist) + i] = norm(a.wrist_flexion[i], 0, 15);
  }
  row[static_cast<std::size_t>(StressJoint::kNeck)] = norm(a.neck_flexion, 0, 20);
  row[static_cast<std::size_t>(StressJoint::kTrunk)] = norm(a.trunk_flexion, 0, 60);
  return row;
}

std::vector<StressRow> joint_stress_heatmap(std::span<const JointAngles> sequence) {
  if (sequence.empty()) throw Error(ErrorCode::kValidation, "joint_stress_heatmap: empty sequence");
  std::vector<StressRow> out;
  out.reserve(sequence.size());
  for (const auto& a : sequence) out.push_back(joint_stress(a));
  return out;
}

}  // namespace ergocam
