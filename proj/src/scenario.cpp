#include "ergocam/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ergocam/error.hpp"

namespace ergocam {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kValidation, "scenario: field '" + path + "' " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) field_error(path + key, "is missing");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) field_error(path, "must be an integer");
  return j.get<int>();
}

Eigen::Vector3d vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) field_error(path, "must be an array of 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) v(i) = number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  return v;
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

RigConfig parse_rig(const json& j, const std::string& path) {
  RigConfig rig;
  const json& id = require(j, "id", path);
  if (!id.is_string()) field_error(path + "id", "must be a string");
  rig.id = id.get<std::string>();

  const std::string lp = path + "left.";
  const json& left = require(j, "left", path);
  rig.left_position = vec3(require(left, "position", lp), lp + "position");
  if (left.contains("axis_angle")) {
    rig.left_rotation = rotation_from_axis_angle<double>(vec3(left.at("axis_angle"), lp + "axis_angle"));
  } else if (left.contains("look_at")) {
    rig.left_rotation = look_at_rotation<double>(rig.left_position, vec3(left.at("look_at"), lp + "look_at"));
  } else {
    field_error(lp + "axis_angle", "is missing (or give look_at)");
  }

  const double baseline = number(require(j, "baseline", path), path + "baseline");
  if (!(baseline > 0)) field_error(path + "baseline", "must be positive");
  rig.relative_translation = Eigen::Vector3d(-baseline, 0, 0);
  if (j.contains("relative")) {
    const std::string rp = path + "relative.";
    const json& rel = j.at("relative");
    rig.relative_rotation = rotation_from_axis_angle<double>(vec3(require(rel, "axis_angle", rp), rp + "axis_angle"));
    rig.relative_translation = vec3(require(rel, "translation", rp), rp + "translation");
    if (std::abs(rig.relative_translation.norm() - baseline) > 1e-6) {
      field_error(rp + "translation", "has length inconsistent with baseline");
    }
  }
  rig.noise_sigma = number(require(j, "noise_sigma", path), path + "noise_sigma");
  if (!(rig.noise_sigma >= 0)) field_error(path + "noise_sigma", "must be >= 0");
  return rig;
}

MotionPhase parse_phase(const json& j, const std::string& path) {
  MotionPhase ph;
  const json& name = require(j, "name", path);
  if (!name.is_string()) field_error(path + "name", "must be a string");
  ph.name = name.get<std::string>();
  ph.duration = number(require(j, "duration", path), path + "duration");
  if (!(ph.duration > 0)) field_error(path + "duration", "must be positive");
  const json& target = require(j, "target", path);
  if (target.is_string()) {
    const auto t = target.get<std::string>();
    if (t == "rest") {
      ph.target = TargetKind::kRest;
    } else if (t == "delivery") {
      ph.target = TargetKind::kDelivery;
    } else {
      field_error(path + "target", "must be \"rest\", \"delivery\" or a point");
    }
  } else {
    ph.target = TargetKind::kPoint;
    ph.point = vec3(target, path + "target");
  }
  return ph;
}

}  // namespace

StereoRig<double> RigConfig::make_rig() const {
  const auto left = CameraModel<double>::from_center(id + "/left", left_rotation, left_position);
  auto rig = StereoRig<double>::make(id, left, relative_rotation, relative_translation);
  rig.right = CameraModel<double>(id + "/right", rig.right.rotation(), rig.right.translation());
  return rig;
}

RigConfig RigConfig::looking_at(std::string id, const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                                double baseline, double noise_sigma) {
  RigConfig rig;
  rig.id = std::move(id);
  rig.left_position = position;
  rig.left_rotation = look_at_rotation<double>(position, target);
  rig.relative_translation = Eigen::Vector3d(-baseline, 0, 0);
  rig.noise_sigma = noise_sigma;
  return rig;
}

int Scenario::warmup_frames() const { return static_cast<int>(std::floor(warmup_s * frame_rate + 1e-9)); }

void Scenario::validate() const {
  if (statures.empty()) throw Error(ErrorCode::kValidation, "scenario: no operator stature");
  for (double h : statures) {
    if (!(h >= kMinStature && h <= kMaxStature)) {
      throw Error(ErrorCode::kValidation, "scenario: stature " + std::to_string(h) + " outside [1.2, 2.2] m");
    }
  }
  if (seeds_per_stature < 1) throw Error(ErrorCode::kValidation, "scenario: seeds_per_stature must be >= 1");
  if (!(frame_rate > 0)) throw Error(ErrorCode::kValidation, "scenario: frame_rate must be positive");
  if (!(warmup_s >= 0)) throw Error(ErrorCode::kValidation, "scenario: warmup_s must be >= 0");
  if (rigs.empty() || rigs.size() > 8) throw Error(ErrorCode::kValidation, "scenario: need 1 to 8 rigs");
  for (std::size_t i = 0; i < rigs.size(); ++i)
    for (std::size_t k = i + 1; k < rigs.size(); ++k)
      if (rigs[i].id == rigs[k].id) throw Error(ErrorCode::kValidation, "scenario: duplicate rig id " + rigs[i].id);
  for (const auto& ph : motion.phases) {
    if (!(ph.duration > 0)) throw Error(ErrorCode::kValidation, "scenario: phase " + ph.name + " has no duration");
  }
  if (!default_delivery.allFinite()) throw Error(ErrorCode::kValidation, "scenario: default delivery not finite");
}

Scenario default_scenario() {
  Scenario s;
  s.name = "default";
  const Eigen::Vector3d target(0, 0, 1.0);
  const auto place = [&](const char* id, double azimuth_deg, double sigma) {
    const double r = 1.3, az = azimuth_deg * kDeg;
    return RigConfig::looking_at(id, {r * std::cos(az), r * std::sin(az), 1.6}, target, 0.8, sigma);
  };
  s.rigs = {place("S1", 35, 0.002), place("S2", -35, 0.002), place("S3", 10, 0.004)};
  s.motion = default_reach_task();
  s.default_delivery = Eigen::Vector3d(0.50, -0.227, 0.818 * 1.75);
  return s;
}

std::vector<double> stature_grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw Error(ErrorCode::kValidation, "stature grid: invalid range");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e6) / 1e6);
  return out;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kValidation, std::string("scenario: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "scenario: top level must be an object");

  Scenario s;
  if (j.contains("name")) s.name = j.at("name").get<std::string>();

  const json& op = require(j, "operator", "");
  if (op.contains("stature")) {
    s.statures = {number(op.at("stature"), "operator.stature")};
  } else if (op.contains("statures")) {
    s.statures.clear();
    const json& arr = op.at("statures");
    if (!arr.is_array() || arr.empty()) field_error("operator.statures", "must be a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) s.statures.push_back(number(arr[i], "operator.statures"));
  } else if (op.contains("stature_grid")) {
    const json& g = op.at("stature_grid");
    s.statures = stature_grid(number(require(g, "min", "operator.stature_grid."), "operator.stature_grid.min"),
                              number(require(g, "max", "operator.stature_grid."), "operator.stature_grid.max"),
                              number(require(g, "step", "operator.stature_grid."), "operator.stature_grid.step"));
  } else {
    field_error("operator.stature", "is missing (or give statures / stature_grid)");
  }
  if (j.contains("seeds_per_stature")) s.seeds_per_stature = integer(j.at("seeds_per_stature"), "seeds_per_stature");
  if (j.contains("frame_rate")) s.frame_rate = number(j.at("frame_rate"), "frame_rate");
  s.warmup_s = number(require(j, "warmup_s", ""), "warmup_s");

  const json& rigs = require(j, "rigs", "");
  if (!rigs.is_array() || rigs.empty()) field_error("rigs", "must be a non-empty array");
  for (std::size_t i = 0; i < rigs.size(); ++i) {
    s.rigs.push_back(parse_rig(rigs[i], "rigs[" + std::to_string(i) + "]."));
  }

  const json& motion = require(j, "motion", "");
  const json& phases = require(motion, "phases", "motion.");
  if (!phases.is_array()) field_error("motion.phases", "must be an array");
  s.motion.phases.clear();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    s.motion.phases.push_back(parse_phase(phases[i], "motion.phases[" + std::to_string(i) + "]."));
  }
  s.motion.frame_rate = s.frame_rate;

  const json& robot = require(j, "robot", "");
  s.default_delivery = vec3(require(robot, "default_delivery", "robot."), "robot.default_delivery");
  if (robot.contains("adapt")) s.adapt = robot.at("adapt").get<bool>();

  if (j.contains("ergonomics")) {
    const json& e = j.at("ergonomics");
    const auto opt_int = [&](const char* key, int& dst) {
      if (e.contains(key)) dst = integer(e.at(key), std::string("ergonomics.") + key);
    };
    opt_int("muscle_use_a", s.adjustments.muscle_use_a);
    opt_int("muscle_use_b", s.adjustments.muscle_use_b);
    opt_int("force_a", s.adjustments.force_a);
    opt_int("force_b", s.adjustments.force_b);
    opt_int("wrist_twist", s.adjustments.wrist_twist);
    if (e.contains("wrist_flexion_deg")) {
      s.adjustments.wrist_flexion_deg = number(e.at("wrist_flexion_deg"), "ergonomics.wrist_flexion_deg");
    }
    if (s.adjustments.wrist_twist < 1 || s.adjustments.wrist_twist > 2) {
      field_error("ergonomics.wrist_twist", "must be 1 or 2");
    }
  }
  if (j.contains("engagement")) {
    const json& e = j.at("engagement");
    const auto opt = [&](const char* key, double& dst) {
      if (e.contains(key)) dst = number(e.at(key), std::string("engagement.") + key);
    };
    opt("max_trunk_deg", s.engagement.max_trunk_deg);
    opt("low_trunk_deg", s.engagement.low_trunk_deg);
    opt("max_neck_deg", s.engagement.max_neck_deg);
    opt("ramp_fraction", s.engagement.ramp_fraction);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kValidation, "scenario: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["operator"]["statures"] = s.statures;
  j["seeds_per_stature"] = s.seeds_per_stature;
  j["frame_rate"] = s.frame_rate;
  j["warmup_s"] = s.warmup_s;
  j["rigs"] = json::array();
  for (const auto& r : s.rigs) {
    json rj;
    rj["id"] = r.id;
    rj["left"]["position"] = to_json(r.left_position);
    rj["left"]["axis_angle"] = to_json(axis_angle_from_rotation<double>(r.left_rotation));
    rj["baseline"] = r.baseline();
    rj["relative"]["axis_angle"] = to_json(axis_angle_from_rotation<double>(r.relative_rotation));
    rj["relative"]["translation"] = to_json(r.relative_translation);
    rj["noise_sigma"] = r.noise_sigma;
    j["rigs"].push_back(rj);
  }
  j["motion"]["phases"] = json::array();
  for (const auto& ph : s.motion.phases) {
    json pj;
    pj["name"] = ph.name;
    pj["duration"] = ph.duration;
    if (ph.target == TargetKind::kRest) {
      pj["target"] = "rest";
    } else if (ph.target == TargetKind::kDelivery) {
      pj["target"] = "delivery";
    } else {
      pj["target"] = to_json(ph.point);
    }
    j["motion"]["phases"].push_back(pj);
  }
  j["robot"]["default_delivery"] = to_json(s.default_delivery);
  j["robot"]["adapt"] = s.adapt;
  j["ergonomics"] = {{"muscle_use_a", s.adjustments.muscle_use_a}, {"muscle_use_b", s.adjustments.muscle_use_b},
                     {"force_a", s.adjustments.force_a},           {"force_b", s.adjustments.force_b},
                     {"wrist_twist", s.adjustments.wrist_twist},   {"wrist_flexion_deg", s.adjustments.wrist_flexion_deg}};
  j["engagement"] = {{"max_trunk_deg", s.engagement.max_trunk_deg},
                     {"low_trunk_deg", s.engagement.low_trunk_deg},
                     {"max_neck_deg", s.engagement.max_neck_deg},
                     {"ramp_fraction", s.engagement.ramp_fraction}};
  return j.dump(2);
}

Scenario with_stature(const Scenario& s, double stature) {
  Scenario out = s;
  out.statures = {stature};
  return out;
}

}  // namespace ergocam
