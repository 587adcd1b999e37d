#include "ergocam/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ergocam/ergonomics.hpp"
#include "ergocam/error.hpp"

namespace ergocam {

std::string_view to_string(AnthropometricClass c) {
  switch (c) {
    case AnthropometricClass::kC1: return "c1";
    case AnthropometricClass::kC2: return "c2";
    case AnthropometricClass::kC3: return "c3";
  }
  return "unknown";
}

std::optional<AnthropometricClass> class_from_string(std::string_view s) {
  if (s == "c1") return AnthropometricClass::kC1;
  if (s == "c2") return AnthropometricClass::kC2;
  if (s == "c3") return AnthropometricClass::kC3;
  return std::nullopt;
}

ClassBounds bounds(AnthropometricClass c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (c) {
    case AnthropometricClass::kC1: return {-inf, kClassLowerBound};
    case AnthropometricClass::kC2: return {kClassLowerBound, kClassUpperBound};
    case AnthropometricClass::kC3: return {kClassUpperBound, inf};
  }
  return {-inf, inf};
}

double representative_stature(AnthropometricClass c) {
  switch (c) {
    case AnthropometricClass::kC1: return 1.60;
    case AnthropometricClass::kC2: return 1.75;
    case AnthropometricClass::kC3: return 1.90;
  }
  return 1.75;
}

AnthropometricClass classify_height(double h) {
  if (!std::isfinite(h) || h <= 0) {
    throw Error(ErrorCode::kValidation, "classify_height: height must be positive, got " + std::to_string(h));
  }
  if (h < kClassLowerBound) return AnthropometricClass::kC1;
  if (h <= kClassUpperBound) return AnthropometricClass::kC2;
  return AnthropometricClass::kC3;
}

double estimate_height(std::span<const LandmarkFrame> frames) {
  std::vector<double> chain;
  for (const auto& f : frames) {
    if (!f.fused_complete() || !f.has(Landmark::kHeadTop)) continue;
    if (compute_joint_angles(f).trunk_flexion >= kUprightTrunkDeg) continue;
    const Eigen::Vector3d ankle = 0.5 * (f.at(Landmark::kLeftAnkle) + f.at(Landmark::kRightAnkle));
    const Eigen::Vector3d hip = 0.5 * (f.at(Landmark::kLeftHip) + f.at(Landmark::kRightHip));
    const Eigen::Vector3d shoulder = 0.5 * (f.at(Landmark::kLeftShoulder) + f.at(Landmark::kRightShoulder));
    chain.push_back((hip - ankle).norm() + (shoulder - hip).norm() + (f.at(Landmark::kHeadTop) - shoulder).norm());
  }
  if (static_cast<int>(chain.size()) < kMinUprightFrames) {
    throw Error(ErrorCode::kInsufficientData, "estimate_height: " + std::to_string(chain.size()) +
                                                  " upright frames, need " + std::to_string(kMinUprightFrames));
  }
  std::sort(chain.begin(), chain.end());
  const std::size_t n = chain.size();
  return n % 2 == 1 ? chain[n / 2] : 0.5 * (chain[n / 2 - 1] + chain[n / 2]);
}

RobotDeliveryParams adapt_robot(AnthropometricClass c, const RobotDeliveryParams& current) {
  if (current.adapted) {
    throw Error(ErrorCode::kSingleAdaptationViolation,
                "adapt_robot: delivery parameters were already adapted in this run");
  }
  RobotDeliveryParams out = current;
  out.delivery_point.z() = kDeliveryHeightRatio * representative_stature(c);
  out.adapted = true;
  out.source_class = c;
  return out;
}

}  // namespace ergocam
