#pragma once

// Offline evaluation of recordings: landmark RMSE per source, paired
// pre/post RULA comparison and flat exports.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ergocam/recording.hpp"

namespace ergocam {

struct RmseReport {
  std::vector<std::string> rig_ids;
  Eigen::MatrixXd rig;    // rigs x 12, meters
  Eigen::VectorXd fused;  // 12, meters
  int frames = 0;

  int best_rig(int landmark) const;
  int worst_rig(int landmark) const;
  bool fused_not_worse_than_worst(int landmark) const;
  /// Fused RMSE at most (1 + tolerance) times the best rig's.
  bool fused_near_best(int landmark, double tolerance = 0.10) const;
  bool fused_beats_best(int landmark) const;
};

/// Per-landmark sqrt(mean over frames of squared Euclidean error) against
/// ground truth, over every frame of every segment. Frames in which a source
/// lacks the landmark are skipped for that source.
RmseReport compute_rmse(const RunRecording& rec);

std::string format_rmse_table(const RmseReport& report);
std::string rmse_to_json(const RmseReport& report);

struct RulaRunSummary {
  double stature = 0;
  std::uint64_t seed = 0;
  double mean_grand = 0;
  AreaScores areas;
  std::vector<RulaRecord> records;
};

/// Mean grand score and per-area means over the task segment.
RulaRunSummary summarize_rula(const RunRecording& rec);

struct StatureComparison {
  double stature = 0;
  int runs = 0;
  double pre_mean_grand = 0;
  double post_mean_grand = 0;
};

struct RulaComparison {
  std::vector<StatureComparison> statures;  // ascending stature
  AreaScores pre_areas;
  AreaScores post_areas;
  std::vector<RulaRunSummary> pre_runs;
  std::vector<RulaRunSummary> post_runs;

  /// pre - post per area, in kAreaNames order.
  std::array<double, 6> area_improvement() const;
};

/// Pairs runs by (stature, seed); every pre run needs exactly one post run.
RulaComparison compare_rula(const std::vector<RunRecording>& pre, const std::vector<RunRecording>& post);

std::string format_rula_comparison(const RulaComparison& c);

/// Writes grand_by_stature.csv, area_scores.csv, joint_angles.csv and
/// angle_distribution.csv into `dir`.
void write_rula_comparison(const RulaComparison& c, const std::filesystem::path& dir);

enum class ExportFormat { kCsv, kJson };

/// frame,landmark,x,y,z,source rows for ground truth, rigs and fusion.
std::string export_landmarks(const RunRecording& rec, ExportFormat format);
std::string export_rula(const RunRecording& rec, ExportFormat format);
/// Per-frame normalized joint stress.
std::string export_heatmap(const RunRecording& rec, ExportFormat format);

}  // namespace ergocam
