#pragma once

// Scenario description and its JSON file format.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ergocam/camera_geometry.hpp"
#include "ergocam/ergonomics.hpp"
#include "ergocam/skeleton_sim.hpp"

namespace ergocam {

struct RigConfig {
  std::string id;
  Eigen::Matrix3d left_rotation = Eigen::Matrix3d::Identity();  // world -> left camera
  Eigen::Vector3d left_position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d relative_rotation = Eigen::Matrix3d::Identity();  // left -> right camera
  Eigen::Vector3d relative_translation = Eigen::Vector3d::Zero();
  double noise_sigma = 0;

  double baseline() const { return relative_translation.norm(); }
  StereoRig<double> make_rig() const;

  /// Rig whose left camera sits at `position` looking at `target`, with the
  /// right camera `baseline` meters to its image-right.
  static RigConfig looking_at(std::string id, const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                              double baseline, double noise_sigma);
};

struct Scenario {
  std::string name = "scenario";
  std::vector<double> statures{1.75};
  int seeds_per_stature = 1;
  double frame_rate = 10.0;
  double warmup_s = 3.0;
  std::vector<RigConfig> rigs;
  MotionScript motion;
  EngagementRule engagement;
  Eigen::Vector3d default_delivery = Eigen::Vector3d::Zero();
  bool adapt = true;
  RulaAdjustments adjustments;

  int warmup_frames() const;
  void validate() const;
};

/// Three rigs 1.3 m from the operator at azimuths +35, -35 and +10 degrees
/// (baseline 0.8 m, sigma 0.002 / 0.002 / 0.004), the standard reach task
/// and the shoulder-height delivery of a 1.75 m operator.
Scenario default_scenario();

/// Stature grid [lo, hi] with the given step, both ends included.
std::vector<double> stature_grid(double lo, double hi, double step);

/// Parses the JSON scenario format (comments allowed). Missing or malformed
/// fields raise a validation error naming the field path.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON rendering; parsing it back reproduces s up to rotation rounding.
std::string scenario_to_json(const Scenario& s);

/// Copy of `s` restricted to one operator stature.
Scenario with_stature(const Scenario& s, double stature);

}  // namespace ergocam
