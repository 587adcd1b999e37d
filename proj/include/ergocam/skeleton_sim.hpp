#pragma once

// Stature-parameterized standing operator, reach-task animation and
// synthetic multi-view capture.
//
// World frame: x forward (towards the workbench), y to the operator's left,
// z up, floor at z = 0, feet centered on the origin.

#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ergocam/camera_geometry.hpp"
#include "ergocam/landmarks.hpp"

namespace ergocam {

/// Body-segment proportions as fractions of stature (Drillis and Contini).
struct SegmentRatios {
  double knee_height = 0.285;
  double hip_height = 0.530;
  double shoulder_height = 0.818;
  double upper_arm = 0.186;
  double forearm = 0.146;
  double shoulder_width = 0.259;
  double hip_width = 0.191;
  // Head markers, measured from the shoulder midpoint along the neck axis.
  double mid_ear = 0.112;
  double nose_forward = 0.055;
  double nose_up = 0.107;
};

inline constexpr SegmentRatios kDrillisContini{};

inline constexpr double kMinStature = 1.2;
inline constexpr double kMaxStature = 2.2;

struct AnthropometricProfile {
  double stature = 0;
  double knee_height = 0;
  double hip_height = 0;
  double shoulder_height = 0;
  double upper_arm = 0;
  double forearm = 0;
  double shoulder_width = 0;
  double hip_width = 0;
  double mid_ear_offset = 0;
  double nose_forward = 0;
  double nose_up = 0;

  /// Named segment lengths in meters. The vertical chain is ankle_knee,
  /// knee_hip, hip_shoulder and shoulder_head_top.
  std::map<std::string, double> segment_lengths() const;
  double vertical_chain() const;
  double reach() const { return upper_arm + forearm; }
};

AnthropometricProfile build_skeleton(double stature, const SegmentRatios& ratios = kDrillisContini);

/// How trunk and neck flexion respond to the height of a reach target.
///
/// Below the hip the trunk bends from `low_trunk_deg` up to `max_trunk_deg`
/// (target on the floor) and the neck is fully flexed. Between hip and
/// shoulder the trunk and neck ramp in over `ramp_fraction` of stature below
/// the shoulder. At or above shoulder height the operator stays upright.
struct EngagementRule {
  double max_trunk_deg = 60.0;
  double low_trunk_deg = 18.0;
  double max_neck_deg = 25.0;
  double ramp_fraction = 0.05;
};

struct Posture {
  double trunk_deg = 0;
  double neck_deg = 0;
};

Posture engagement_for_target(const AnthropometricProfile& profile, double target_z,
                              const EngagementRule& rule = {});

struct PoseResult {
  LandmarkFrame frame;
  bool reachable = true;
};

/// Elbow flexion of the idle left arm: upper arm hanging, hand held forward.
inline constexpr double kIdleElbowFlexionDeg = 80.0;

/// Full-body pose for trunk/neck flexion and a right-wrist target. The left
/// upper arm hangs vertically with the elbow at kIdleElbowFlexionDeg. Without
/// a target the right arm hangs straight.
PoseResult pose_skeleton(const AnthropometricProfile& profile, const Posture& posture,
                         const Eigen::Vector3d* wrist_target);

enum class TargetKind { kRest, kDelivery, kPoint };

struct MotionPhase {
  std::string name;
  double duration = 0;
  TargetKind target = TargetKind::kRest;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // used by kPoint
};

struct MotionScript {
  std::vector<MotionPhase> phases;
  double frame_rate = 10.0;

  double total_duration() const;
  int frame_count() const;
};

/// rest 0.5 s, reach 1.5 s, hold 2.5 s, return 1.5 s, rest 0.5 s.
MotionScript default_reach_task();

struct GroundTruthSequence {
  std::vector<LandmarkFrame> frames;
  std::vector<bool> reachable;
  std::vector<Posture> postures;
};

/// Animates the script starting from a relaxed standing pose. Each phase
/// eases (raised cosine) from the end state of the previous phase to its own
/// target. Frame indices start at `first_frame`.
GroundTruthSequence animate(const AnthropometricProfile& profile, const MotionScript& script,
                            const Eigen::Vector3d& delivery_point, const EngagementRule& rule = {},
                            int first_frame = 0);

struct CameraObservations {
  std::string camera_id;
  int frame_index = 0;
  std::array<Eigen::Vector2d, kLandmarkCount> uv{};
  std::array<bool, kLandmarkCount> visible{};
};

/// Projects every present landmark into one camera with isotropic Gaussian
/// noise. Two normal draws are consumed per landmark whether or not it is
/// visible, so the noise stream does not depend on the pose.
CameraObservations capture_camera(const LandmarkFrame& frame, const CameraModel<double>& cam,
                                  double noise_sigma, std::mt19937_64& rng);

/// Both cameras of a rig. A landmark behind either camera is dropped from both.
std::array<CameraObservations, 2> capture(const LandmarkFrame& frame, const StereoRig<double>& rig,
                                          double noise_sigma, std::mt19937_64& rng_left,
                                          std::mt19937_64& rng_right);

}  // namespace ergocam
