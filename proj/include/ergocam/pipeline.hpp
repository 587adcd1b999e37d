#pragma once

// Node graph for one scenario run: simulator -> cameras -> fusion ->
// ergonomics, with an adaptation collector and recorders on the side.
//
// A run is three segments. The warm-up (operator standing at rest) feeds
// height estimation and the single adaptation decision. The task segment is
// then played twice with identical observation noise, once with the default
// delivery point ("pre") and once with the adapted one ("post").

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ergocam/bus.hpp"
#include "ergocam/fusion_graph.hpp"
#include "ergocam/recording.hpp"
#include "ergocam/scenario.hpp"
#include "ergocam/synchronizer.hpp"

namespace ergocam {

inline constexpr int kSyncLagFrames = 3;

/// Rig geometry and the prefactored fusion solver shared by every segment of
/// a run. Solvers are cached by visibility pattern; each cache miss counts as
/// one prefactorization.
class FusionContext {
 public:
  explicit FusionContext(std::vector<StereoRig<double>> rigs);

  const std::vector<StereoRig<double>>& rigs() const { return rigs_; }
  const Eigen::MatrixX3d& rig_positions() const { return rig_positions_; }
  std::vector<std::string> camera_ids() const;
  std::vector<std::string> rig_ids() const;

  struct Solver {
    FusionTopology<double> topology;
    FusionSolver<double> solver;
  };
  const Solver& solver_for(const Visibility& visibility);
  int prefactor_count() const { return prefactor_count_.load(); }

 private:
  std::vector<StereoRig<double>> rigs_;
  Eigen::MatrixX3d rig_positions_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::unique_ptr<Solver>> cache_;
  std::atomic<int> prefactor_count_{0};
};

/// DLT per rig for every landmark both of its cameras see. `bundle` holds the
/// cameras in FusionContext::camera_ids() order.
PerRigLandmarks triangulate_rigs(const FusionContext& ctx, const FrameBundle& bundle);

/// Graph-Laplacian fusion of the body landmarks; head markers are averaged.
FusedLandmarks fuse_rigs(FusionContext& ctx, const PerRigLandmarks& per_rig);

RulaMsg score_frame(const LandmarkFrame& fused, const RulaAdjustments& adj);

/// Seeds one camera's noise stream from (seed, camera index, segment tag).
std::mt19937_64 camera_rng(std::uint64_t seed, std::size_t camera_index, std::uint64_t segment_tag);

/// Single-shot robot adaptation: a second apply() throws.
class AdaptationController {
 public:
  explicit AdaptationController(RobotDeliveryParams defaults) : params_(std::move(defaults)) {}
  const RobotDeliveryParams& params() const { return params_; }
  const RobotDeliveryParams& apply(AnthropometricClass c);

 private:
  RobotDeliveryParams params_;
};

struct RunStats {
  int prefactor_count = 0;
  int processed_frames = 0;
  double processing_seconds = 0;  // triangulation + fusion + scoring
  double mean_frame_ms() const { return processed_frames ? 1e3 * processing_seconds / processed_frames : 0; }
};

struct RunOptions {
  SchedulerMode scheduler = SchedulerMode::kSingleThreaded;
  std::optional<std::filesystem::path> out_root;  // writes <root>/{pre,post}/<run-id>/
  bool keep_in_memory = true;
};

struct RunResult {
  RunRecording pre;
  RunRecording post;
  AdaptationEvent adaptation;
  RunStats stats;
};

/// Runs a single-stature scenario end to end.
RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunOptions& options = {});

}  // namespace ergocam
