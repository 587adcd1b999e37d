#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ergocam {

// The first 12 entries take part in fusion; the last three are head markers
// used only for stature and neck angles.
enum class Landmark : int {
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHip,
  kRightHip,
  kLeftKnee,
  kRightKnee,
  kLeftAnkle,
  kRightAnkle,
  kHeadTop,
  kNose,
  kMidEar,
};

inline constexpr int kFusedLandmarkCount = 12;
inline constexpr int kLandmarkCount = 15;

constexpr int index_of(Landmark l) { return static_cast<int>(l); }

inline constexpr std::array<std::string_view, kLandmarkCount> kLandmarkNames = {
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist",   "left_hip",       "right_hip",  "left_knee",  "right_knee",
    "left_ankle",    "right_ankle",    "head_top",   "nose",       "mid_ear"};

inline std::string_view landmark_name(int index) { return kLandmarkNames.at(static_cast<std::size_t>(index)); }
inline std::string_view landmark_name(Landmark l) { return landmark_name(index_of(l)); }

inline std::optional<int> landmark_from_name(std::string_view name) {
  for (int i = 0; i < kLandmarkCount; ++i)
    if (kLandmarkNames[static_cast<std::size_t>(i)] == name) return i;
  return std::nullopt;
}

using LandmarkMatrix = Eigen::Matrix<double, kLandmarkCount, 3, Eigen::RowMajor>;

/// Landmark positions (world frame, meters) at one frame. Rows of absent
/// landmarks are NaN and their mask entry is false.
struct LandmarkFrame {
  int frame_index = 0;
  LandmarkMatrix positions = LandmarkMatrix::Constant(std::numeric_limits<double>::quiet_NaN());
  std::array<bool, kLandmarkCount> present{};

  Eigen::Vector3d at(Landmark l) const { return positions.row(index_of(l)).transpose(); }
  bool has(Landmark l) const { return present[static_cast<std::size_t>(index_of(l))]; }
  void set(int i, const Eigen::Vector3d& p) {
    positions.row(i) = p.transpose();
    present[static_cast<std::size_t>(i)] = true;
  }
  void set(Landmark l, const Eigen::Vector3d& p) { set(index_of(l), p); }
  void clear(int i) {
    positions.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
    present[static_cast<std::size_t>(i)] = false;
  }
  bool fused_complete() const {
    for (int i = 0; i < kFusedLandmarkCount; ++i)
      if (!present[static_cast<std::size_t>(i)]) return false;
    return true;
  }
};

}  // namespace ergocam
