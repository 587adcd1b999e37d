#pragma once

// Frame-index alignment of per-camera messages.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ergocam/skeleton_sim.hpp"

namespace ergocam {

struct FrameBundle {
  int frame_index = 0;
  // One slot per expected camera, in construction order.
  std::vector<std::optional<CameraObservations>> cameras;

  bool complete() const;
};

struct SyncOutput {
  std::vector<FrameBundle> emitted;  // complete, in frame order
  std::vector<FrameBundle> dropped;  // incomplete, in frame order
};

/// Emits frame k once every camera delivered it. Frame k is given up when
/// some camera has already reached frame k + lag. Bundles leave strictly in
/// frame order.
class Synchronizer {
 public:
  explicit Synchronizer(std::vector<std::string> camera_ids, int lag = 3, int first_frame = 0);

  SyncOutput push(const CameraObservations& obs);
  /// End of stream: emits what is complete and drops the rest.
  SyncOutput flush();

  int dropped_count() const { return dropped_; }
  int emitted_count() const { return emitted_; }

 private:
  void advance(SyncOutput& out, bool final);

  std::vector<std::string> ids_;
  int lag_;
  int next_;
  int latest_ = -1;
  int dropped_ = 0;
  int emitted_ = 0;
  std::map<int, FrameBundle> pending_;
};

}  // namespace ergocam
