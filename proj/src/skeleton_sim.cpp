#include "ergocam/skeleton_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ergocam/error.hpp"

namespace ergocam {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Rotation about world y that tips +z towards +x by `deg`.
Eigen::Matrix3d pitch_forward(double deg) {
  const double c = std::cos(deg * kDeg), s = std::sin(deg * kDeg);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

double ease(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * s);
}

}  // namespace

std::map<std::string, double> AnthropometricProfile::segment_lengths() const {
  return {
      {"ankle_knee", knee_height},
      {"knee_hip", hip_height - knee_height},
      {"hip_shoulder", shoulder_height - hip_height},
      {"shoulder_head_top", stature - shoulder_height},
      {"upper_arm", upper_arm},
      {"forearm", forearm},
      {"shoulder_width", shoulder_width},
      {"hip_width", hip_width},
  };
}

double AnthropometricProfile::vertical_chain() const {
  const auto s = segment_lengths();
  return s.at("ankle_knee") + s.at("knee_hip") + s.at("hip_shoulder") + s.at("shoulder_head_top");
}

AnthropometricProfile build_skeleton(double stature, const SegmentRatios& r) {
  if (!std::isfinite(stature) || stature < kMinStature || stature > kMaxStature) {
    throw Error(ErrorCode::kValidation,
                "build_skeleton: stature " + std::to_string(stature) + " outside [1.2, 2.2] m");
  }
  AnthropometricProfile p;
  p.stature = stature;
  p.knee_height = r.knee_height * stature;
  p.hip_height = r.hip_height * stature;
  p.shoulder_height = r.shoulder_height * stature;
  p.upper_arm = r.upper_arm * stature;
  p.forearm = r.forearm * stature;
  p.shoulder_width = r.shoulder_width * stature;
  p.hip_width = r.hip_width * stature;
  p.mid_ear_offset = r.mid_ear * stature;
  p.nose_forward = r.nose_forward * stature;
  p.nose_up = r.nose_up * stature;
  return p;
}

Posture engagement_for_target(const AnthropometricProfile& p, double target_z,
                              const EngagementRule& rule) {
  Posture out;
  if (target_z < p.hip_height) {
    const double depth = std::min(1.0, (p.hip_height - target_z) / p.hip_height);
    out.trunk_deg = rule.low_trunk_deg + (rule.max_trunk_deg - rule.low_trunk_deg) * depth;
    out.neck_deg = rule.max_neck_deg;
  } else if (target_z < p.shoulder_height) {
    const double ramp = std::min(1.0, (p.shoulder_height - target_z) / (rule.ramp_fraction * p.stature));
    out.trunk_deg = rule.low_trunk_deg * ramp;
    out.neck_deg = rule.max_neck_deg * ramp;
  }
  return out;
}

PoseResult pose_skeleton(const AnthropometricProfile& p, const Posture& posture,
                         const Eigen::Vector3d* wrist_target) {
  PoseResult out;
  LandmarkFrame& f = out.frame;
  const double half_hip = 0.5 * p.hip_width;
  const double half_sh = 0.5 * p.shoulder_width;

  f.set(Landmark::kLeftAnkle, {0, half_hip, 0});
  f.set(Landmark::kRightAnkle, {0, -half_hip, 0});
  f.set(Landmark::kLeftKnee, {0, half_hip, p.knee_height});
  f.set(Landmark::kRightKnee, {0, -half_hip, p.knee_height});
  f.set(Landmark::kLeftHip, {0, half_hip, p.hip_height});
  f.set(Landmark::kRightHip, {0, -half_hip, p.hip_height});

  const Eigen::Vector3d hip_mid(0, 0, p.hip_height);
  const Eigen::Matrix3d trunk = pitch_forward(posture.trunk_deg);
  const double torso = p.shoulder_height - p.hip_height;
  const Eigen::Vector3d shoulder_mid = hip_mid + trunk * Eigen::Vector3d(0, 0, torso);
  const Eigen::Vector3d left_shoulder = hip_mid + trunk * Eigen::Vector3d(0, half_sh, torso);
  const Eigen::Vector3d right_shoulder = hip_mid + trunk * Eigen::Vector3d(0, -half_sh, torso);
  f.set(Landmark::kLeftShoulder, left_shoulder);
  f.set(Landmark::kRightShoulder, right_shoulder);

  const Eigen::Matrix3d head = pitch_forward(posture.trunk_deg + posture.neck_deg);
  f.set(Landmark::kMidEar, shoulder_mid + head * Eigen::Vector3d(0, 0, p.mid_ear_offset));
  f.set(Landmark::kHeadTop, shoulder_mid + head * Eigen::Vector3d(0, 0, p.stature - p.shoulder_height));
  f.set(Landmark::kNose, shoulder_mid + head * Eigen::Vector3d(p.nose_forward, 0, p.nose_up));

  const Eigen::Vector3d down(0, 0, -1);
  const Eigen::Vector3d left_elbow = left_shoulder + p.upper_arm * down;
  f.set(Landmark::kLeftElbow, left_elbow);
  f.set(Landmark::kLeftWrist, left_elbow + p.forearm * (pitch_forward(-kIdleElbowFlexionDeg) * down));

  if (wrist_target == nullptr) {
    f.set(Landmark::kRightElbow, right_shoulder + p.upper_arm * down);
    f.set(Landmark::kRightWrist, right_shoulder + p.reach() * down);
    return out;
  }

  // Two-segment analytic IK with the elbow bent towards the floor.
  const double a = p.upper_arm, b = p.forearm;
  const Eigen::Vector3d v = *wrist_target - right_shoulder;
  const double dist = v.norm();
  out.reachable = dist <= a + b + 1e-9 && dist >= std::abs(a - b) - 1e-9;
  const Eigen::Vector3d u = dist > 0 ? Eigen::Vector3d(v / dist) : down;
  const double d = std::clamp(dist, std::abs(a - b), a + b);
  Eigen::Vector3d pole = down - down.dot(u) * u;
  if (pole.norm() < 1e-9) pole = Eigen::Vector3d::UnitX() - u.x() * u;
  pole.normalize();
  const double cos_alpha = std::clamp((a * a + d * d - b * b) / (2 * a * d), -1.0, 1.0);
  const double alpha = std::acos(cos_alpha);
  f.set(Landmark::kRightElbow, right_shoulder + a * (std::cos(alpha) * u + std::sin(alpha) * pole));
  f.set(Landmark::kRightWrist, right_shoulder + d * u);
  return out;
}

double MotionScript::total_duration() const {
  double t = 0;
  for (const auto& ph : phases) t += ph.duration;
  return t;
}

int MotionScript::frame_count() const {
  return static_cast<int>(std::floor(total_duration() * frame_rate + 1e-9));
}

MotionScript default_reach_task() {
  MotionScript s;
  s.phases = {{"rest", 0.5, TargetKind::kRest, {}},
              {"reach", 1.5, TargetKind::kDelivery, {}},
              {"hold", 2.5, TargetKind::kDelivery, {}},
              {"return", 1.5, TargetKind::kRest, {}},
              {"settle", 0.5, TargetKind::kRest, {}}};
  return s;
}

GroundTruthSequence animate(const AnthropometricProfile& profile, const MotionScript& script,
                            const Eigen::Vector3d& delivery_point, const EngagementRule& rule,
                            int first_frame) {
  for (const auto& ph : script.phases) {
    if (!(ph.duration > 0)) {
      throw Error(ErrorCode::kValidation, "animate: phase '" + ph.name + "' has non-positive duration");
    }
  }
  if (!(script.frame_rate > 0)) throw Error(ErrorCode::kValidation, "animate: frame rate must be positive");

  GroundTruthSequence seq;
  const int n = script.frame_count();
  if (n <= 0) return seq;
  seq.frames.reserve(static_cast<std::size_t>(n));

  const double dt = 1.0 / script.frame_rate;
  const auto hanging_wrist = [&](const Posture& posture) {
    return pose_skeleton(profile, posture, nullptr).frame.at(Landmark::kRightWrist);
  };
  const auto phase_goal = [&](const MotionPhase& ph) -> std::pair<Posture, const Eigen::Vector3d*> {
    switch (ph.target) {
      case TargetKind::kDelivery:
        return {engagement_for_target(profile, delivery_point.z(), rule), &delivery_point};
      case TargetKind::kPoint:
        return {engagement_for_target(profile, ph.point.z(), rule), &ph.point};
      case TargetKind::kRest:
        break;
    }
    return {Posture{}, nullptr};
  };

  Posture start_posture{};
  Eigen::Vector3d start_wrist = hanging_wrist(start_posture);
  double phase_start = 0;
  std::size_t phase = 0;

  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    while (phase + 1 < script.phases.size() &&
           t >= phase_start + script.phases[phase].duration - 1e-9) {
      // Carry the previous phase's end state into the next one.
      const auto [goal_posture, goal_point] = phase_goal(script.phases[phase]);
      Eigen::Vector3d end = goal_point ? *goal_point : hanging_wrist(goal_posture);
      const PoseResult end_pose = pose_skeleton(profile, goal_posture, &end);
      start_wrist = end_pose.frame.at(Landmark::kRightWrist);
      start_posture = goal_posture;
      phase_start += script.phases[phase].duration;
      ++phase;
    }
    const MotionPhase& ph = script.phases[phase];
    const double s = ease((t - phase_start + dt) / ph.duration);
    const auto [goal_posture, goal_point] = phase_goal(ph);
    Posture posture;
    posture.trunk_deg = start_posture.trunk_deg + (goal_posture.trunk_deg - start_posture.trunk_deg) * s;
    posture.neck_deg = start_posture.neck_deg + (goal_posture.neck_deg - start_posture.neck_deg) * s;
    const Eigen::Vector3d end = goal_point ? *goal_point : hanging_wrist(posture);
    const Eigen::Vector3d target = start_wrist + (end - start_wrist) * s;
    PoseResult pose = pose_skeleton(profile, posture, &target);
    pose.frame.frame_index = first_frame + k;
    seq.frames.push_back(pose.frame);
    seq.reachable.push_back(pose.reachable);
    seq.postures.push_back(posture);
  }
  return seq;
}

CameraObservations capture_camera(const LandmarkFrame& frame, const CameraModel<double>& cam,
                                  double noise_sigma, std::mt19937_64& rng) {
  if (!(noise_sigma >= 0)) throw Error(ErrorCode::kValidation, "capture: noise sigma must be >= 0");
  CameraObservations obs;
  obs.camera_id = cam.id();
  obs.frame_index = frame.frame_index;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < kLandmarkCount; ++i) {
    const double nu = gauss(rng);
    const double nv = gauss(rng);
    const auto idx = static_cast<std::size_t>(i);
    obs.uv[idx] = Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
    if (!frame.present[idx]) continue;
    const Eigen::Vector3d p = frame.positions.row(i).transpose();
    if (cam.depth(p) <= 1e-9) continue;
    obs.uv[idx] = project(p, cam) + noise_sigma * Eigen::Vector2d(nu, nv);
    obs.visible[idx] = true;
  }
  return obs;
}

std::array<CameraObservations, 2> capture(const LandmarkFrame& frame, const StereoRig<double>& rig,
                                          double noise_sigma, std::mt19937_64& rng_left,
                                          std::mt19937_64& rng_right) {
  std::array<CameraObservations, 2> out{capture_camera(frame, rig.left, noise_sigma, rng_left),
                                        capture_camera(frame, rig.right, noise_sigma, rng_right)};
  for (std::size_t i = 0; i < static_cast<std::size_t>(kLandmarkCount); ++i) {
    if (out[0].visible[i] && out[1].visible[i]) continue;
    for (auto& o : out) {
      o.visible[i] = false;
      o.uv[i].setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

}  // namespace ergocam
