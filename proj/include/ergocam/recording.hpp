#pragma once

// Run recordings: five CSV record streams plus a JSON manifest per run.
//
//   ground_truth.csv       segment,frame,landmark,x,y,z,reachable
//   observations.csv       segment,frame,camera,landmark,u,v
//   per_rig_landmarks.csv  segment,frame,rig,landmark,x,y,z,residual
//   fused_landmarks.csv    segment,frame,landmark,x,y,z,source
//   rula.csv               segment,frame,<angles>,<scores>,status
//
// Numbers carry 9 significant digits. Rows exist only for present values.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergocam/messages.hpp"

namespace ergocam {

inline constexpr const char* kSegmentWarmup = "warmup";
inline constexpr const char* kSegmentTask = "task";

inline constexpr std::array<const char*, 5> kStreamFiles = {
    "ground_truth.csv", "observations.csv", "per_rig_landmarks.csv", "fused_landmarks.csv", "rula.csv"};
inline constexpr const char* kManifestFile = "manifest.json";

struct GroundTruthRecord {
  std::string segment;
  LandmarkFrame frame;
  bool reachable = true;
};

struct ObservationRecord {
  std::string segment;
  CameraObservations obs;
};

struct PerRigRecord {
  std::string segment;
  int frame_index = 0;
  RigEstimate estimate;
};

struct FusedRecord {
  std::string segment;
  FusedLandmarks fused;
};

struct RulaRecord {
  std::string segment;
  RulaMsg rula;
};

struct RunManifest {
  std::string run_id;
  std::string phase;  // "pre" or "post"
  double stature = 0;
  std::uint64_t seed = 0;
  std::string scheduler;
  std::string scenario_json;
  std::vector<std::string> rig_ids;
  Eigen::Vector3d delivery_point = Eigen::Vector3d::Zero();
  std::optional<AdaptationEvent> adaptation;
  int warmup_frames = 0;
  int task_frames = 0;
  int dropped_frames = 0;
  int fused_frames = 0;
  std::string status = "running";
  std::map<std::string, std::string> file_digests;
  std::string digest;
};

struct RunRecording {
  RunManifest manifest;
  std::vector<GroundTruthRecord> ground_truth;
  std::vector<ObservationRecord> observations;
  std::vector<PerRigRecord> per_rig;
  std::vector<FusedRecord> fused;
  std::vector<RulaRecord> rula;
};

/// Directory name of one run, e.g. "h1.750_seed7".
std::string run_id(double stature, std::uint64_t seed);

std::string format_number(double v);

// Each returns the CSV rows (with trailing newlines) for one record.
std::string stream_header(std::size_t stream);
std::string to_csv(const GroundTruthRecord& r);
std::string to_csv(const ObservationRecord& r);
std::string to_csv(const PerRigRecord& r);
std::string to_csv(const FusedRecord& r);
std::string to_csv(const RulaRecord& r);

/// Full file contents of the five streams, keyed by file name.
std::map<std::string, std::string> serialize_streams(const RunRecording& rec);

std::string sha256_hex(const std::string& bytes);
/// SHA-256 over the stream files in name order (name, newline, contents).
std::string streams_digest(const std::map<std::string, std::string>& streams);
std::string recording_digest(const RunRecording& rec);
/// Digest of a recording directory on disk, same definition.
std::string recording_digest(const std::filesystem::path& dir);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

/// Streams records to a run directory with a flush per frame. The manifest
/// is written on open and atomically replaced on finalize.
class RecordingWriter {
 public:
  RecordingWriter(const std::filesystem::path& dir, const RunManifest& initial);
  ~RecordingWriter();
  RecordingWriter(const RecordingWriter&) = delete;
  RecordingWriter& operator=(const RecordingWriter&) = delete;

  void write(const GroundTruthRecord& r);
  void write(const ObservationRecord& r);
  void write(const PerRigRecord& r);
  void write(const FusedRecord& r);
  void write(const RulaRecord& r);
  void flush();
  /// Closes the streams, fills digests and status into `m` and writes it.
  void finalize(RunManifest& m);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::array<std::ofstream, 5> streams_;
  bool finalized_ = false;
};

void write_manifest_atomically(const std::filesystem::path& dir, const RunManifest& m);

/// Loads a run directory. Throws io error for missing files.
RunRecording read_recording(const std::filesystem::path& dir);

/// All run directories (containing a manifest) below `root`, sorted.
std::vector<std::filesystem::path> find_runs(const std::filesystem::path& root);

}  // namespace ergocam
