#pragma once

// Joint angles from 3D landmarks, RULA scoring and joint-stress export.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergocam/landmarks.hpp"

namespace ergocam {

enum Side : int { kLeft = 0, kRight = 1 };

struct JointAngles {
  std::array<double, 2> upper_arm_flexion{};  // indexed by Side
  std::array<double, 2> lower_arm_flexion{};
  std::array<double, 2> wrist_flexion{};
  double neck_flexion = 0;
  double trunk_flexion = 0;
  bool legs_supported = true;
  // False when the head markers were missing and neck_flexion defaulted to 0.
  bool neck_measured = true;
};

/// Neck extension beyond this angle (degrees, negative) scores as extension.
inline constexpr double kNeckExtensionDeg = -5.0;
/// Trunk flexion up to this angle counts as upright.
inline constexpr double kTrunkUprightDeg = 5.0;
inline constexpr double kGroundToleranceM = 0.05;

/// Throws incomplete-frame if any of the 12 body landmarks is missing.
JointAngles compute_joint_angles(const LandmarkFrame& frame);

struct RulaAdjustments {
  int muscle_use_a = 0;
  int muscle_use_b = 0;
  int force_a = 0;
  int force_b = 0;
  int wrist_twist = 1;
  // Replaces the measured wrist flexion (the body landmarks carry no hand).
  double wrist_flexion_deg = 0;
};

int score_upper_arm(double deg);
int score_lower_arm(double deg);
int score_wrist(double deg);
int score_neck(double deg);
int score_trunk(double deg);
int score_legs(bool supported);

int rula_table_a(int upper_arm, int lower_arm, int wrist, int wrist_twist);
int rula_table_b(int neck, int trunk, int legs);
int rula_table_c(int wrist_arm, int neck_trunk_leg);
int action_level(int grand);

struct ArmScores {
  int upper_arm = 1;
  int lower_arm = 1;
  int wrist = 1;
  int wrist_twist = 1;
  int table_a = 1;
  int wrist_arm_score = 1;
  int grand = 1;
};

struct RulaBreakdown {
  // Step scores of the governing side.
  int score_upper_arm = 1;
  int score_lower_arm = 1;
  int score_wrist = 1;
  int score_wrist_twist = 1;
  int table_a = 1;
  int score_neck = 1;
  int score_trunk = 1;
  int score_legs = 1;
  int table_b = 1;
  int muscle_use_a = 0;
  int muscle_use_b = 0;
  int force_a = 0;
  int force_b = 0;
  int wrist_arm_score = 1;
  int neck_trunk_leg_score = 1;
  int grand = 1;
  int action_level = 1;
  std::array<ArmScores, 2> sides{};
  Side governing = kRight;
};

/// Step scores entering the worksheet for one arm plus the shared body part.
struct RulaSteps {
  int upper_arm = 1, lower_arm = 1, wrist = 1, wrist_twist = 1;
  int neck = 1, trunk = 1, legs = 1;
};

/// Grand score from step scores and adjustments (tables A, B, C).
int rula_grand_from_steps(const RulaSteps& steps, const RulaAdjustments& adj = {});

/// Both arms are scored; the side with the higher grand score governs.
RulaBreakdown rula_score(const JointAngles& angles, const RulaAdjustments& adj = {});

enum class PostureLevel { kSafe, kWarn, kUnsafe };

struct PostureStatus {
  PostureLevel status = PostureLevel::kSafe;
  std::string message;
};

PostureStatus classify_posture(const RulaBreakdown& breakdown);
PostureStatus classify_posture(int grand);
std::string_view to_string(PostureLevel level);

struct AreaScores {
  double upper_arms = 0;
  double lower_arms = 0;
  double wrist = 0;
  double neck = 0;
  double trunk = 0;
  double legs = 0;
};

inline constexpr std::array<std::string_view, 6> kAreaNames = {"upper_arms", "lower_arms", "wrist",
                                                               "neck",       "trunk",      "legs"};
std::array<double, 6> as_array(const AreaScores& a);

AreaScores area_scores(std::span<const RulaBreakdown> sequence);

enum class StressJoint : int {
  kLeftUpperArm,
  kRightUpperArm,
  kLeftLowerArm,
  kRightLowerArm,
  kLeftWrist,
  kRightWrist,
  kNeck,
  kTrunk,
};
inline constexpr int kStressJointCount = 8;
inline constexpr std::array<std::string_view, kStressJointCount> kStressJointNames = {
    "left_upper_arm", "right_upper_arm", "left_lower_arm", "right_lower_arm",
    "left_wrist",     "right_wrist",     "neck",           "trunk"};

using StressRow = std::array<double, kStressJointCount>;

/// Per-frame normalized stress: |angle| mapped linearly from the joint's
/// comfortable onset (0) to its worst-band onset (1), clipped to [0, 1].
StressRow joint_stress(const JointAngles& angles);
std::vector<StressRow> joint_stress_heatmap(std::span<const JointAngles> sequence);

}  // namespace ergocam
