#include "ergocam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ergocam/error.hpp"

namespace ergocam {

using nlohmann::json;

namespace {

using FrameKey = std::pair<std::string, int>;

struct Accumulator {
  double sum = 0;
  int n = 0;
  void add(const Eigen::Vector3d& d) {
    sum += d.squaredNorm();
    ++n;
  }
  double rmse() const { return n ? std::sqrt(sum / n) : std::numeric_limits<double>::quiet_NaN(); }
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

AreaScores mean_areas(const std::vector<RulaRunSummary>& runs) {
  std::vector<RulaBreakdown> all;
  for (const auto& r : runs)
    for (const auto& rec : r.records) all.push_back(rec.rula.breakdown);
  return area_scores(all);
}

struct AngleColumn {
  const char* name;
  double (*get)(const JointAngles&);
};

constexpr AngleColumn kAngleColumns[] = {
    {"upper_arm_left", [](const JointAngles& a) { return a.upper_arm_flexion[kLeft]; }},
    {"upper_arm_right", [](const JointAngles& a) { return a.upper_arm_flexion[kRight]; }},
    {"lower_arm_left", [](const JointAngles& a) { return a.lower_arm_flexion[kLeft]; }},
    {"lower_arm_right", [](const JointAngles& a) { return a.lower_arm_flexion[kRight]; }},
    {"neck", [](const JointAngles& a) { return a.neck_flexion; }},
    {"trunk", [](const JointAngles& a) { return a.trunk_flexion; }},
};

}  // namespace

int RmseReport::best_rig(int i) const {
  Eigen::Index r = 0;
  rig.col(i).minCoeff(&r);
  return static_cast<int>(r);
}

int RmseReport::worst_rig(int i) const {
  Eigen::Index r = 0;
  rig.col(i).maxCoeff(&r);
  return static_cast<int>(r);
}

bool RmseReport::fused_not_worse_than_worst(int i) const { return fused(i) <= rig.col(i).maxCoeff(); }

bool RmseReport::fused_near_best(int i, double tolerance) const {
  return fused(i) <= (1.0 + tolerance) * rig.col(i).minCoeff();
}

bool RmseReport::fused_beats_best(int i) const { return fused(i) < rig.col(i).minCoeff(); }

RmseReport compute_rmse(const RunRecording& rec) {
  std::map<FrameKey, const LandmarkFrame*> truth;
  for (const auto& g : rec.ground_truth) truth[{g.segment, g.frame.frame_index}] = &g.frame;
  if (truth.empty()) throw Error(ErrorCode::kInsufficientData, "eval-rmse: recording has no ground truth");
  if (rec.fused.empty()) throw Error(ErrorCode::kInsufficientData, "eval-rmse: recording has no fused landmarks");

  RmseReport report;
  report.rig_ids = rec.manifest.rig_ids;
  std::map<std::string, std::size_t> rig_index;
  for (std::size_t j = 0; j < report.rig_ids.size(); ++j) rig_index[report.rig_ids[j]] = j;
  std::vector<std::array<Accumulator, kFusedLandmarkCount>> rig_acc(report.rig_ids.size());
  std::array<Accumulator, kFusedLandmarkCount> fused_acc;

  const auto accumulate = [&](const std::string& segment, const LandmarkFrame& est, auto& acc) {
    const auto it = truth.find({segment, est.frame_index});
    if (it == truth.end()) {
      throw Error(ErrorCode::kInsufficientData,
                  "eval-rmse: no ground truth for frame " + std::to_string(est.frame_index));
    }
    for (int i = 0; i < kFusedLandmarkCount; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!est.present[k] || !it->second->present[k]) continue;
      acc[k].add(est.positions.row(i).transpose() - it->second->positions.row(i).transpose());
    }
  };
  for (const auto& p : rec.per_rig) {
    const auto it = rig_index.find(p.estimate.rig_id);
    if (it == rig_index.end()) throw Error(ErrorCode::kIo, "eval-rmse: unknown rig " + p.estimate.rig_id);
    accumulate(p.segment, p.estimate.landmarks, rig_acc[it->second]);
  }
  for (const auto& f : rec.fused) accumulate(f.segment, f.fused.frame, fused_acc);

  report.frames = static_cast<int>(rec.fused.size());
  report.rig.resize(static_cast<Eigen::Index>(report.rig_ids.size()), kFusedLandmarkCount);
  report.fused.resize(kFusedLandmarkCount);
  for (int i = 0; i < kFusedLandmarkCount; ++i) {
    const auto k = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < rig_acc.size(); ++j) report.rig(static_cast<Eigen::Index>(j), i) = rig_acc[j][k].rmse();
    report.fused(i) = fused_acc[k].rmse();
  }
  return report;
}

std::string format_rmse_table(const RmseReport& r) {
  std::ostringstream o;
  o << "landmark          ";
  for (const auto& id : r.rig_ids) o << "  " << id << std::string(10 - std::min<std::size_t>(id.size(), 9), ' ');
  o << "  fused        flag\n";
  for (int i = 0; i < kFusedLandmarkCount; ++i) {
    std::string name(landmark_name(i));
    name.resize(18, ' ');
    o << name;
    for (Eigen::Index j = 0; j < r.rig.rows(); ++j) o << "  " << fixed(r.rig(j, i), 7) << "   ";
    o << "  " << fixed(r.fused(i), 7) << "    ";
    if (r.fused_beats_best(i)) {
      o << "better-than-best";
    } else if (r.fused_near_best(i)) {
      o << "near-best";
    } else if (r.fused_not_worse_than_worst(i)) {
      o << "between";
    } else {
      o << "worse-than-worst";
    }
    o << '\n';
  }
  o << "(meters, " << r.frames << " frames)\n";
  return o.str();
}

std::string rmse_to_json(const RmseReport& r) {
  json j;
  j["frames"] = r.frames;
  j["units"] = "m";
  j["landmarks"] = json::array();
  for (int i = 0; i < kFusedLandmarkCount; ++i) {
    json l;
    l["landmark"] = std::string(landmark_name(i));
    for (Eigen::Index k = 0; k < r.rig.rows(); ++k) l["rigs"][r.rig_ids[static_cast<std::size_t>(k)]] = r.rig(k, i);
    l["fused"] = r.fused(i);
    l["best_rig"] = r.rig_ids[static_cast<std::size_t>(r.best_rig(i))];
    l["worst_rig"] = r.rig_ids[static_cast<std::size_t>(r.worst_rig(i))];
    l["fused_not_worse_than_worst"] = r.fused_not_worse_than_worst(i);
    l["fused_within_10pct_of_best"] = r.fused_near_best(i);
    l["fused_beats_best"] = r.fused_beats_best(i);
    j["landmarks"].push_back(l);
  }
  return j.dump(2) + "\n";
}

RulaRunSummary summarize_rula(const RunRecording& rec) {
  RulaRunSummary s;
  s.stature = rec.manifest.stature;
  s.seed = rec.manifest.seed;
  for (const auto& r : rec.rula)
    if (r.segment == kSegmentTask) s.records.push_back(r);
  if (s.records.empty()) {
    throw Error(ErrorCode::kInsufficientData, "eval-rula: run " + rec.manifest.run_id + " has no task frames");
  }
  std::vector<RulaBreakdown> b;
  double sum = 0;
  for (const auto& r : s.records) {
    b.push_back(r.rula.breakdown);
    sum += r.rula.breakdown.grand;
  }
  s.mean_grand = sum / static_cast<double>(s.records.size());
  s.areas = area_scores(b);
  return s;
}

std::array<double, 6> RulaComparison::area_improvement() const {
  const auto pre = as_array(pre_areas);
  const auto post = as_array(post_areas);
  std::array<double, 6> d{};
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pre[i] - post[i];
  return d;
}

RulaComparison compare_rula(const std::vector<RunRecording>& pre, const std::vector<RunRecording>& post) {
  if (pre.empty()) throw Error(ErrorCode::kPairing, "eval-rula: no pre-adaptation runs");
  const auto key = [](const RunRecording& r) {
    return std::make_pair(std::llround(r.manifest.stature * 1e6), r.manifest.seed);
  };
  std::map<std::pair<long long, std::uint64_t>, const RunRecording*> post_by_key;
  for (const auto& r : post) {
    if (!post_by_key.emplace(key(r), &r).second) {
      throw Error(ErrorCode::kPairing, "eval-rula: duplicate post run " + r.manifest.run_id);
    }
  }
  if (post_by_key.size() != pre.size()) {
    throw Error(ErrorCode::kPairing, "eval-rula: " + std::to_string(pre.size()) + " pre runs but " +
                                         std::to_string(post.size()) + " post runs");
  }
  RulaComparison c;
  std::map<long long, StatureComparison> by_stature;
  for (const auto& r : pre) {
    const auto it = post_by_key.find(key(r));
    if (it == post_by_key.end()) {
      throw Error(ErrorCode::kPairing, "eval-rula: no post run matching stature/seed of " + r.manifest.run_id);
    }
    c.pre_runs.push_back(summarize_rula(r));
    c.post_runs.push_back(summarize_rula(*it->second));
    auto& row = by_stature[key(r).first];
    row.stature = r.manifest.stature;
    ++row.runs;
    row.pre_mean_grand += c.pre_runs.back().mean_grand;
    row.post_mean_grand += c.post_runs.back().mean_grand;
  }
  for (auto& [k, row] : by_stature) {
    row.pre_mean_grand /= row.runs;
    row.post_mean_grand /= row.runs;
    c.statures.push_back(row);
  }
  c.pre_areas = mean_areas(c.pre_runs);
  c.post_areas = mean_areas(c.post_runs);
  return c;
}

std::string format_rula_comparison(const RulaComparison& c) {
  std::ostringstream o;
  o << "stature  runs  pre_grand  post_grand  delta\n";
  for (const auto& s : c.statures) {
    o << fixed(s.stature, 3) << "  " << s.runs << "     " << fixed(s.pre_mean_grand, 4) << "     "
      << fixed(s.post_mean_grand, 4) << "      " << fixed(s.pre_mean_grand - s.post_mean_grand, 4) << '\n';
  }
  o << "\narea        pre     post    improvement\n";
  const auto pre = as_array(c.pre_areas), post = as_array(c.post_areas);
  for (std::size_t i = 0; i < kAreaNames.size(); ++i) {
    std::string name(kAreaNames[i]);
    name.resize(11, ' ');
    o << name << " " << fixed(pre[i], 4) << "  " << fixed(post[i], 4) << "  " << fixed(pre[i] - post[i], 4) << '\n';
  }
  return o.str();
}

void write_rula_comparison(const RulaComparison& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::kIo, "eval-rula: cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("grand_by_stature.csv");
    f << "stature,runs,pre_mean_grand,post_mean_grand\n";
    for (const auto& s : c.statures)
      f << format_number(s.stature) << ',' << s.runs << ',' << format_number(s.pre_mean_grand) << ','
        << format_number(s.post_mean_grand) << '\n';
  }
  {
    auto f = open("area_scores.csv");
    f << "area,pre_mean,post_mean,improvement\n";
    const auto pre = as_array(c.pre_areas), post = as_array(c.post_areas);
    for (std::size_t i = 0; i < kAreaNames.size(); ++i)
      f << kAreaNames[i] << ',' << format_number(pre[i]) << ',' << format_number(post[i]) << ','
        << format_number(pre[i] - post[i]) << '\n';
  }
  {
    auto f = open("joint_angles.csv");
    f << "phase,stature,seed,frame";
    for (const auto& col : kAngleColumns) f << ',' << col.name;
    f << '\n';
    for (const auto* runs : {&c.pre_runs, &c.post_runs}) {
      const char* phase = runs == &c.pre_runs ? "pre" : "post";
      for (const auto& run : *runs)
        for (const auto& r : run.records) {
          f << phase << ',' << format_number(run.stature) << ',' << run.seed << ',' << r.rula.frame_index;
          for (const auto& col : kAngleColumns) f << ',' << format_number(col.get(r.rula.angles));
          f << '\n';
        }
    }
  }
  {
    auto f = open("angle_distribution.csv");
    f << "phase,joint,count,mean,std,min,p25,median,p75,max\n";
    for (const auto* runs : {&c.pre_runs, &c.post_runs}) {
      const char* phase = runs == &c.pre_runs ? "pre" : "post";
      for (const auto& col : kAngleColumns) {
        std::vector<double> v;
        for (const auto& run : *runs)
          for (const auto& r : run.records) v.push_back(col.get(r.rula.angles));
        double mean = 0, var = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        f << phase << ',' << col.name << ',' << v.size() << ',' << format_number(mean) << ','
          << format_number(std::sqrt(var)) << ',' << format_number(quantile(v, 0)) << ','
          << format_number(quantile(v, 0.25)) << ',' << format_number(quantile(v, 0.5)) << ','
          << format_number(quantile(v, 0.75)) << ',' << format_number(quantile(v, 1)) << '\n';
      }
    }
  }
}

std::string export_landmarks(const RunRecording& rec, ExportFormat format) {
  struct Row {
    int frame;
    std::string landmark;
    Eigen::Vector3d p;
    std::string source;
  };
  std::vector<Row> rows;
  const auto add_frame = [&](const LandmarkFrame& f, const std::string& source) {
    for (int i = 0; i < kLandmarkCount; ++i)
      if (f.present[static_cast<std::size_t>(i)])
        rows.push_back({f.frame_index, std::string(landmark_name(i)), f.positions.row(i).transpose(), source});
  };
  for (const auto& g : rec.ground_truth) add_frame(g.frame, "ground_truth");
  for (const auto& p : rec.per_rig) add_frame(p.estimate.landmarks, p.estimate.rig_id);
  for (const auto& f : rec.fused) add_frame(f.fused.frame, "fused");
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.frame < b.frame; });

  if (format == ExportFormat::kCsv) {
    std::string out = "frame,landmark,x,y,z,source\n";
    for (const auto& r : rows) {
      out += std::to_string(r.frame) + "," + r.landmark + "," + format_number(r.p.x()) + "," +
             format_number(r.p.y()) + "," + format_number(r.p.z()) + "," + r.source + "\n";
    }
    return out;
  }
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"frame", r.frame},
                 {"landmark", r.landmark},
                 {"x", r.p.x()},
                 {"y", r.p.y()},
                 {"z", r.p.z()},
                 {"source", r.source}});
  }
  return j.dump(1) + "\n";
}

std::string export_rula(const RunRecording& rec, ExportFormat format) {
  if (format == ExportFormat::kCsv) {
    std::string out = stream_header(4);
    for (const auto& r : rec.rula) out += to_csv(r);
    return out;
  }
  json j = json::array();
  for (const auto& r : rec.rula) {
    const auto& a = r.rula.angles;
    const auto& b = r.rula.breakdown;
    j.push_back({{"segment", r.segment},
                 {"frame", r.rula.frame_index},
                 {"angles",
                  {{"upper_arm", {a.upper_arm_flexion[kLeft], a.upper_arm_flexion[kRight]}},
                   {"lower_arm", {a.lower_arm_flexion[kLeft], a.lower_arm_flexion[kRight]}},
                   {"wrist", {a.wrist_flexion[kLeft], a.wrist_flexion[kRight]}},
                   {"neck", a.neck_flexion},
                   {"trunk", a.trunk_flexion},
                   {"legs_supported", a.legs_supported}}},
                 {"scores",
                  {{"upper_arm", b.score_upper_arm},
                   {"lower_arm", b.score_lower_arm},
                   {"wrist", b.score_wrist},
                   {"wrist_twist", b.score_wrist_twist},
                   {"table_a", b.table_a},
                   {"neck", b.score_neck},
                   {"trunk", b.score_trunk},
                   {"legs", b.score_legs},
                   {"table_b", b.table_b},
                   {"wrist_arm", b.wrist_arm_score},
                   {"neck_trunk_leg", b.neck_trunk_leg_score}}},
                 {"grand", b.grand},
                 {"action_level", b.action_level},
                 {"governing", b.governing == kLeft ? "left" : "right"},
                 {"status", std::string(to_string(r.rula.status.status))},
                 {"message", r.rula.status.message}});
  }
  return j.dump(1) + "\n";
}

std::string export_heatmap(const RunRecording& rec, ExportFormat format) {
  std::vector<JointAngles> angles;
  for (const auto& r : rec.rula) angles.push_back(r.rula.angles);
  if (angles.empty()) throw Error(ErrorCode::kInsufficientData, "export: recording has no scored frames");
  const auto stress = joint_stress_heatmap(angles);
  if (format == ExportFormat::kCsv) {
    std::string out = "segment,frame";
    for (const auto& n : kStressJointNames) out += "," + std::string(n);
    out += "\n";
    for (std::size_t k = 0; k < stress.size(); ++k) {
      out += rec.rula[k].segment + "," + std::to_string(rec.rula[k].rula.frame_index);
      for (double v : stress[k]) out += "," + format_number(v);
      out += "\n";
    }
    return out;
  }
  json j = json::array();
  for (std::size_t k = 0; k < stress.size(); ++k) {
    json row = {{"segment", rec.rula[k].segment}, {"frame", rec.rula[k].rula.frame_index}};
    for (std::size_t i = 0; i < kStressJointNames.size(); ++i) row[std::string(kStressJointNames[i])] = stress[k][i];
    j.push_back(row);
  }
  return j.dump(1) + "\n";
}

}  // namespace ergocam
