#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ergocam/adaptation.hpp"
#include "ergocam/ergonomics.hpp"
#include "ergocam/landmarks.hpp"
#include "ergocam/skeleton_sim.hpp"

namespace ergocam {

inline constexpr const char* kTopicGroundTruth = "sim/ground_truth";
inline constexpr const char* kTopicPerRig = "fusion/per_rig_landmarks";
inline constexpr const char* kTopicFused = "fusion/fused_landmarks";
inline constexpr const char* kTopicRula = "ergonomics/rula";
inline constexpr const char* kTopicAdaptation = "adaptation/event";

inline std::string camera_topic(const std::string& camera_id) { return "camera/" + camera_id + "/landmarks_2d"; }

struct EndOfStream {};

struct GroundTruthMsg {
  LandmarkFrame frame;
  bool reachable = true;
};

struct RigEstimate {
  std::string rig_id;
  LandmarkFrame landmarks;  // triangulated, NaN where the rig has no view
  std::array<double, kLandmarkCount> residual{};
};

struct PerRigLandmarks {
  int frame_index = 0;
  std::vector<RigEstimate> rigs;
};

struct FusedLandmarks {
  // Fused body landmarks plus head markers averaged across rigs.
  LandmarkFrame frame;
  std::vector<std::string> rig_ids;
  Eigen::MatrixX3d rig_nodes;  // re-estimated rig positions, diagnostics only
};

struct RulaMsg {
  int frame_index = 0;
  JointAngles angles;
  RulaBreakdown breakdown;
  PostureStatus status;
};

struct AdaptationEvent {
  double estimated_height = 0;
  AnthropometricClass height_class = AnthropometricClass::kC2;
  RobotDeliveryParams default_params;
  RobotDeliveryParams chosen;
  int upright_frames = 0;
};

using Payload = std::variant<EndOfStream, GroundTruthMsg, CameraObservations, PerRigLandmarks, FusedLandmarks,
                             RulaMsg, AdaptationEvent>;

struct Message {
  std::string topic;
  int frame_index = 0;
  double timestamp = 0;
  Payload payload;

  bool end_of_stream() const { return std::holds_alternative<EndOfStream>(payload); }
};

}  // namespace ergocam
