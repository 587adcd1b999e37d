#pragma once

// Stature estimation, anthropometric classes and the one-shot robot
// delivery adjustment.

#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "ergocam/landmarks.hpp"

namespace ergocam {

enum class AnthropometricClass { kC1, kC2, kC3 };

inline constexpr double kClassLowerBound = 1.68;  // c2 starts here, inclusive
inline constexpr double kClassUpperBound = 1.82;  // c2 ends here, inclusive
inline constexpr double kUprightTrunkDeg = 10.0;
inline constexpr int kMinUprightFrames = 10;
inline constexpr double kDeliveryHeightRatio = 0.818;

std::string_view to_string(AnthropometricClass c);
std::optional<AnthropometricClass> class_from_string(std::string_view s);

struct ClassBounds {
  double lower;  // -inf for c1
  double upper;  // +inf for c3
};
ClassBounds bounds(AnthropometricClass c);
double representative_stature(AnthropometricClass c);

AnthropometricClass classify_height(double h);

/// Median over upright frames of the chain ankle-mid -> hip-mid ->
/// shoulder-mid -> head-top. Needs at least 10 upright frames with a head-top.
double estimate_height(std::span<const LandmarkFrame> frames);

struct RobotDeliveryParams {
  Eigen::Vector3d delivery_point = Eigen::Vector3d::Zero();
  bool adapted = false;
  std::optional<AnthropometricClass> source_class;
};

/// Moves the delivery height to the class's shoulder height, keeping the
/// horizontal placement. Throws single-adaptation-violation when `current`
/// has already been adapted.
RobotDeliveryParams adapt_robot(AnthropometricClass c, const RobotDeliveryParams& current);

}  // namespace ergocam
