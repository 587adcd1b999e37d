#include "ergocam/recording.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "ergocam/error.hpp"

namespace ergocam {

using nlohmann::json;

namespace {

enum StreamIndex : std::size_t { kGroundTruth, kObservations, kPerRig, kFused, kRula };

constexpr const char* kRulaHeader =
    "segment,frame,upper_arm_left,upper_arm_right,lower_arm_left,lower_arm_right,wrist_left,wrist_right,"
    "neck,trunk,legs_supported,neck_measured,score_upper_arm,score_lower_arm,score_wrist,score_wrist_twist,"
    "table_a,score_neck,score_trunk,score_legs,table_b,muscle_use_a,muscle_use_b,force_a,force_b,"
    "wrist_arm_score,neck_trunk_leg_score,grand,action_level,governing,"
    "left_upper_arm,left_lower_arm,left_wrist,left_table_a,left_grand,"
    "right_upper_arm,right_lower_arm,right_wrist,right_table_a,right_grand,status";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw Error(ErrorCode::kIo, "recording: bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) { return static_cast<int>(std::lround(parse_double(s))); }

// Reads a CSV file into rows keyed by header name.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::kIo, "recording: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "recording: cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "recording: empty file " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::kIo, "recording: malformed row in " + path.string() + ": " + line);
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

int landmark_index(const std::string& name) {
  const auto i = landmark_from_name(name);
  if (!i) throw Error(ErrorCode::kIo, "recording: unknown landmark '" + name + "'");
  return *i;
}

json delivery_json(const RobotDeliveryParams& p) {
  json j;
  j["point"] = {p.delivery_point.x(), p.delivery_point.y(), p.delivery_point.z()};
  j["adapted"] = p.adapted;
  j["class"] = p.source_class ? json(std::string(to_string(*p.source_class))) : json(nullptr);
  return j;
}

RobotDeliveryParams delivery_from_json(const json& j) {
  RobotDeliveryParams p;
  const auto& pt = j.at("point");
  p.delivery_point = Eigen::Vector3d(pt[0].get<double>(), pt[1].get<double>(), pt[2].get<double>());
  p.adapted = j.at("adapted").get<bool>();
  if (!j.at("class").is_null()) p.source_class = class_from_string(j.at("class").get<std::string>());
  return p;
}

}  // namespace

std::string run_id(double stature, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "h%.3f_seed%llu", stature, static_cast<unsigned long long>(seed));
  return buf;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string stream_header(std::size_t stream) {
  switch (stream) {
    case kGroundTruth: return "segment,frame,landmark,x,y,z,reachable\n";
    case kObservations: return "segment,frame,camera,landmark,u,v\n";
    case kPerRig: return "segment,frame,rig,landmark,x,y,z,residual\n";
    case kFused: return "segment,frame,landmark,x,y,z,source\n";
    case kRula: return std::string(kRulaHeader) + "\n";
  }
  throw Error(ErrorCode::kValidation, "stream_header: unknown stream");
}

std::string to_csv(const GroundTruthRecord& r) {
  std::string out;
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!r.frame.present[static_cast<std::size_t>(i)]) continue;
    out += r.segment + "," + std::to_string(r.frame.frame_index) + "," + std::string(landmark_name(i));
    for (int c = 0; c < 3; ++c) out += "," + format_number(r.frame.positions(i, c));
    out += r.reachable ? ",1\n" : ",0\n";
  }
  return out;
}

std::string to_csv(const ObservationRecord& r) {
  std::string out;
  for (int i = 0; i < kLandmarkCount; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!r.obs.visible[k]) continue;
    out += r.segment + "," + std::to_string(r.obs.frame_index) + "," + r.obs.camera_id + "," +
           std::string(landmark_name(i)) + "," + format_number(r.obs.uv[k].x()) + "," +
           format_number(r.obs.uv[k].y()) + "\n";
  }
  return out;
}

std::string to_csv(const PerRigRecord& r) {
  std::string out;
  const auto& f = r.estimate.landmarks;
  for (int i = 0; i < kLandmarkCount; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!f.present[k]) continue;
    out += r.segment + "," + std::to_string(r.frame_index) + "," + r.estimate.rig_id + "," +
           std::string(landmark_name(i));
    for (int c = 0; c < 3; ++c) out += "," + format_number(f.positions(i, c));
    out += "," + format_number(r.estimate.residual[k]) + "\n";
  }
  return out;
}

std::string to_csv(const FusedRecord& r) {
  std::string out;
  const auto& f = r.fused.frame;
  const std::string prefix = r.segment + "," + std::to_string(f.frame_index) + ",";
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!f.present[static_cast<std::size_t>(i)]) continue;
    out += prefix + std::string(landmark_name(i));
    for (int c = 0; c < 3; ++c) out += "," + format_number(f.positions(i, c));
    out += i < kFusedLandmarkCount ? ",fused\n" : ",head_marker\n";
  }
  for (Eigen::Index j = 0; j < r.fused.rig_nodes.rows(); ++j) {
    out += prefix + r.fused.rig_ids[static_cast<std::size_t>(j)];
    for (int c = 0; c < 3; ++c) out += "," + format_number(r.fused.rig_nodes(j, c));
    out += ",rig_node\n";
  }
  return out;
}

std::string to_csv(const RulaRecord& r) {
  const auto& a = r.rula.angles;
  const auto& b = r.rula.breakdown;
  std::ostringstream o;
  const auto num = [&](double v) { o << ',' << format_number(v); };
  const auto i = [&](int v) { o << ',' << v; };
  o << r.segment << ',' << r.rula.frame_index;
  num(a.upper_arm_flexion[kLeft]);
  num(a.upper_arm_flexion[kRight]);
  num(a.lower_arm_flexion[kLeft]);
  num(a.lower_arm_flexion[kRight]);
  num(a.wrist_flexion[kLeft]);
  num(a.wrist_flexion[kRight]);
  num(a.neck_flexion);
  num(a.trunk_flexion);
  i(a.legs_supported);
  i(a.neck_measured);
  for (int v : {b.score_upper_arm, b.score_lower_arm, b.score_wrist, b.score_wrist_twist, b.table_a, b.score_neck,
                b.score_trunk, b.score_legs, b.table_b, b.muscle_use_a, b.muscle_use_b, b.force_a, b.force_b,
                b.wrist_arm_score, b.neck_trunk_leg_score, b.grand, b.action_level})
    i(v);
  o << ',' << (b.governing == kLeft ? "left" : "right");
  for (const auto& s : b.sides)
    for (int v : {s.upper_arm, s.lower_arm, s.wrist, s.table_a, s.grand}) i(v);
  o << ',' << to_string(r.rula.status.status) << '\n';
  return o.str();
}

std::map<std::string, std::string> serialize_streams(const RunRecording& rec) {
  std::array<std::string, 5> s;
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = stream_header(k);
  for (const auto& r : rec.ground_truth) s[kGroundTruth] += to_csv(r);
  for (const auto& r : rec.observations) s[kObservations] += to_csv(r);
  for (const auto& r : rec.per_rig) s[kPerRig] += to_csv(r);
  for (const auto& r : rec.fused) s[kFused] += to_csv(r);
  for (const auto& r : rec.rula) s[kRula] += to_csv(r);
  std::map<std::string, std::string> out;
  for (std::size_t k = 0; k < s.size(); ++k) out[kStreamFiles[k]] = std::move(s[k]);
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string streams_digest(const std::map<std::string, std::string>& streams) {
  std::string all;
  for (const auto& [name, content] : streams) all += name + "\n" + content;
  return sha256_hex(all);
}

std::string recording_digest(const RunRecording& rec) { return streams_digest(serialize_streams(rec)); }

std::string recording_digest(const std::filesystem::path& dir) {
  std::map<std::string, std::string> streams;
  for (const char* name : kStreamFiles) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "recording: cannot read " + (dir / name).string());
    std::stringstream ss;
    ss << in.rdbuf();
    streams[name] = ss.str();
  }
  return streams_digest(streams);
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["run_id"] = m.run_id;
  j["phase"] = m.phase;
  j["stature"] = m.stature;
  j["seed"] = m.seed;
  j["scheduler"] = m.scheduler;
  j["scenario"] = m.scenario_json.empty() ? json(nullptr) : json::parse(m.scenario_json);
  j["rig_ids"] = m.rig_ids;
  j["delivery_point"] = {m.delivery_point.x(), m.delivery_point.y(), m.delivery_point.z()};
  if (m.adaptation) {
    const auto& a = *m.adaptation;
    j["adaptation"] = {{"estimated_height", std::isfinite(a.estimated_height) ? json(a.estimated_height) : json()},
                       {"class", std::string(to_string(a.height_class))},
                       {"upright_frames", a.upright_frames},
                       {"default", delivery_json(a.default_params)},
                       {"chosen", delivery_json(a.chosen)}};
  } else {
    j["adaptation"] = nullptr;
  }
  j["frames"] = {{"warmup", m.warmup_frames}, {"task", m.task_frames}, {"fused", m.fused_frames}};
  j["dropped_frames"] = m.dropped_frames;
  j["status"] = m.status;
  j["files"] = m.file_digests;
  j["digest"] = m.digest;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.run_id = j.at("run_id").get<std::string>();
    m.phase = j.at("phase").get<std::string>();
    m.stature = j.at("stature").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.scheduler = j.at("scheduler").get<std::string>();
    if (!j.at("scenario").is_null()) m.scenario_json = j.at("scenario").dump(2);
    m.rig_ids = j.at("rig_ids").get<std::vector<std::string>>();
    const auto& d = j.at("delivery_point");
    m.delivery_point = Eigen::Vector3d(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    if (!j.at("adaptation").is_null()) {
      const auto& a = j.at("adaptation");
      AdaptationEvent e;
      e.estimated_height = a.at("estimated_height").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                              : a.at("estimated_height").get<double>();
      e.height_class = class_from_string(a.at("class").get<std::string>()).value_or(AnthropometricClass::kC2);
      e.upright_frames = a.at("upright_frames").get<int>();
      e.default_params = delivery_from_json(a.at("default"));
      e.chosen = delivery_from_json(a.at("chosen"));
      m.adaptation = e;
    }
    m.warmup_frames = j.at("frames").at("warmup").get<int>();
    m.task_frames = j.at("frames").at("task").get<int>();
    m.fused_frames = j.at("frames").at("fused").get<int>();
    m.dropped_frames = j.at("dropped_frames").get<int>();
    m.status = j.at("status").get<std::string>();
    m.file_digests = j.at("files").get<std::map<std::string, std::string>>();
    m.digest = j.at("digest").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("manifest: ") + e.what());
  }
  return m;
}

void write_manifest_atomically(const std::filesystem::path& dir, const RunManifest& m) {
  const auto tmp = dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "recording: cannot write " + tmp.string());
    out << manifest_to_json(m);
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "recording: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, dir / kManifestFile);
}

RecordingWriter::RecordingWriter(const std::filesystem::path& dir, const RunManifest& initial) : dir_(dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "recording: cannot create " + dir_.string() + ": " + ec.message());
  for (std::size_t k = 0; k < streams_.size(); ++k) {
    streams_[k].open(dir_ / kStreamFiles[k], std::ios::binary | std::ios::trunc);
    if (!streams_[k]) throw Error(ErrorCode::kIo, "recording: cannot open " + (dir_ / kStreamFiles[k]).string());
    streams_[k] << stream_header(k);
  }
  write_manifest_atomically(dir_, initial);
}

RecordingWriter::~RecordingWriter() {
  for (auto& s : streams_)
    if (s.is_open()) s.flush();
}

void RecordingWriter::write(const GroundTruthRecord& r) { streams_[kGroundTruth] << to_csv(r); }
void RecordingWriter::write(const ObservationRecord& r) { streams_[kObservations] << to_csv(r); }
void RecordingWriter::write(const PerRigRecord& r) { streams_[kPerRig] << to_csv(r); }
void RecordingWriter::write(const FusedRecord& r) { streams_[kFused] << to_csv(r); }
void RecordingWriter::write(const RulaRecord& r) { streams_[kRula] << to_csv(r); }

void RecordingWriter::flush() {
  for (auto& s : streams_) s.flush();
}

void RecordingWriter::finalize(RunManifest& m) {
  if (finalized_) throw Error(ErrorCode::kIo, "recording: already finalized");
  for (auto& s : streams_) {
    s.flush();
    if (!s) throw Error(ErrorCode::kIo, "recording: write failed in " + dir_.string());
    s.close();
  }
  m.file_digests.clear();
  for (const char* name : kStreamFiles) {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    m.file_digests[name] = sha256_hex(ss.str());
  }
  m.digest = recording_digest(dir_);
  m.status = "complete";
  write_manifest_atomically(dir_, m);
  finalized_ = true;
}

RunRecording read_recording(const std::filesystem::path& dir) {
  RunRecording rec;
  {
    std::ifstream in(dir / kManifestFile);
    if (!in) throw Error(ErrorCode::kIo, "recording: no manifest in " + dir.string());
    std::stringstream ss;
    ss << in.rdbuf();
    rec.manifest = manifest_from_json(ss.str());
  }

  // Records are regrouped by (segment, frame) in file order.
  {
    const Table t = read_table(dir / kStreamFiles[kGroundTruth]);
    const auto cs = t.col("segment"), cf = t.col("frame"), cl = t.col("landmark"), cx = t.col("x"),
               cr = t.col("reachable");
    for (const auto& row : t.rows) {
      const int frame = parse_int(row[cf]);
      if (rec.ground_truth.empty() || rec.ground_truth.back().frame.frame_index != frame ||
          rec.ground_truth.back().segment != row[cs]) {
        rec.ground_truth.push_back({row[cs], LandmarkFrame{}, row[cr] == "1"});
        rec.ground_truth.back().frame.frame_index = frame;
      }
      rec.ground_truth.back().frame.set(
          landmark_index(row[cl]),
          Eigen::Vector3d(parse_double(row[cx]), parse_double(row[cx + 1]), parse_double(row[cx + 2])));
    }
  }
  {
    const Table t = read_table(dir / kStreamFiles[kObservations]);
    const auto cs = t.col("segment"), cf = t.col("frame"), cc = t.col("camera"), cl = t.col("landmark"),
               cu = t.col("u");
    for (const auto& row : t.rows) {
      const int frame = parse_int(row[cf]);
      if (rec.observations.empty() || rec.observations.back().obs.frame_index != frame ||
          rec.observations.back().obs.camera_id != row[cc] || rec.observations.back().segment != row[cs]) {
        ObservationRecord r;
        r.segment = row[cs];
        r.obs.camera_id = row[cc];
        r.obs.frame_index = frame;
        for (auto& uv : r.obs.uv) uv.setConstant(std::numeric_limits<double>::quiet_NaN());
        rec.observations.push_back(std::move(r));
      }
      const auto k = static_cast<std::size_t>(landmark_index(row[cl]));
      rec.observations.back().obs.uv[k] = Eigen::Vector2d(parse_double(row[cu]), parse_double(row[cu + 1]));
      rec.observations.back().obs.visible[k] = true;
    }
  }
  {
    const Table t = read_table(dir / kStreamFiles[kPerRig]);
    const auto cs = t.col("segment"), cf = t.col("frame"), cr = t.col("rig"), cl = t.col("landmark"),
               cx = t.col("x"), cres = t.col("residual");
    for (const auto& row : t.rows) {
      const int frame = parse_int(row[cf]);
      if (rec.per_rig.empty() || rec.per_rig.back().frame_index != frame ||
          rec.per_rig.back().estimate.rig_id != row[cr] || rec.per_rig.back().segment != row[cs]) {
        PerRigRecord r;
        r.segment = row[cs];
        r.frame_index = frame;
        r.estimate.rig_id = row[cr];
        r.estimate.landmarks.frame_index = frame;
        r.estimate.residual.fill(std::numeric_limits<double>::quiet_NaN());
        rec.per_rig.push_back(std::move(r));
      }
      const int i = landmark_index(row[cl]);
      auto& e = rec.per_rig.back().estimate;
      e.landmarks.set(i, Eigen::Vector3d(parse_double(row[cx]), parse_double(row[cx + 1]), parse_double(row[cx + 2])));
      e.residual[static_cast<std::size_t>(i)] = parse_double(row[cres]);
    }
  }
  {
    const Table t = read_table(dir / kStreamFiles[kFused]);
    const auto cs = t.col("segment"), cf = t.col("frame"), cl = t.col("landmark"), cx = t.col("x"),
               csrc = t.col("source");
    for (const auto& row : t.rows) {
      const int frame = parse_int(row[cf]);
      if (rec.fused.empty() || rec.fused.back().fused.frame.frame_index != frame ||
          rec.fused.back().segment != row[cs]) {
        FusedRecord r;
        r.segment = row[cs];
        r.fused.frame.frame_index = frame;
        rec.fused.push_back(std::move(r));
      }
      auto& f = rec.fused.back().fused;
      const Eigen::Vector3d p(parse_double(row[cx]), parse_double(row[cx + 1]), parse_double(row[cx + 2]));
      if (row[csrc] == "rig_node") {
        f.rig_ids.push_back(row[cl]);
        f.rig_nodes.conservativeResize(f.rig_nodes.rows() + 1, 3);
        f.rig_nodes.row(f.rig_nodes.rows() - 1) = p.transpose();
      } else {
        f.frame.set(landmark_index(row[cl]), p);
      }
    }
  }
  {
    const Table t = read_table(dir / kStreamFiles[kRula]);
    for (const auto& row : t.rows) {
      RulaRecord r;
      r.segment = row[t.col("segment")];
      auto& m = r.rula;
      m.frame_index = parse_int(row[t.col("frame")]);
      const auto d = [&](const char* c) { return parse_double(row[t.col(c)]); };
      const auto n = [&](const char* c) { return parse_int(row[t.col(c)]); };
      m.angles.upper_arm_flexion = {d("upper_arm_left"), d("upper_arm_right")};
      m.angles.lower_arm_flexion = {d("lower_arm_left"), d("lower_arm_right")};
      m.angles.wrist_flexion = {d("wrist_left"), d("wrist_right")};
      m.angles.neck_flexion = d("neck");
      m.angles.trunk_flexion = d("trunk");
      m.angles.legs_supported = n("legs_supported") != 0;
      m.angles.neck_measured = n("neck_measured") != 0;
      auto& b = m.breakdown;
      b.score_upper_arm = n("score_upper_arm");
      b.score_lower_arm = n("score_lower_arm");
      b.score_wrist = n("score_wrist");
      b.score_wrist_twist = n("score_wrist_twist");
      b.table_a = n("table_a");
      b.score_neck = n("score_neck");
      b.score_trunk = n("score_trunk");
      b.score_legs = n("score_legs");
      b.table_b = n("table_b");
      b.muscle_use_a = n("muscle_use_a");
      b.muscle_use_b = n("muscle_use_b");
      b.force_a = n("force_a");
      b.force_b = n("force_b");
      b.wrist_arm_score = n("wrist_arm_score");
      b.neck_trunk_leg_score = n("neck_trunk_leg_score");
      b.grand = n("grand");
      b.action_level = n("action_level");
      b.governing = row[t.col("governing")] == "left" ? kLeft : kRight;
      for (int s = 0; s < 2; ++s) {
        const std::string p = s == 0 ? "left_" : "right_";
        auto& arm = b.sides[static_cast<std::size_t>(s)];
        arm.upper_arm = n((p + "upper_arm").c_str());
        arm.lower_arm = n((p + "lower_arm").c_str());
        arm.wrist = n((p + "wrist").c_str());
        arm.table_a = n((p + "table_a").c_str());
        arm.grand = n((p + "grand").c_str());
        arm.wrist_twist = b.score_wrist_twist;
        arm.wrist_arm_score = arm.table_a + b.muscle_use_a + b.force_a;
      }
      m.status = classify_posture(b.grand);
      rec.rula.push_back(std::move(r));
    }
  }
  return rec;
}

std::vector<std::filesystem::path> find_runs(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  if (std::filesystem::exists(root / kManifestFile)) {
    out.push_back(root);
    return out;
  }
  if (!std::filesystem::is_directory(root)) {
    throw Error(ErrorCode::kIo, "recording: " + root.string() + " is not a directory");
  }
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == kManifestFile) out.push_back(e.path().parent_path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ergocam
