#include "ergocam/synchronizer.hpp"

#include <algorithm>

#include "ergocam/error.hpp"

namespace ergocam {

bool FrameBundle::complete() const {
  return std::all_of(cameras.begin(), cameras.end(), [](const auto& c) { return c.has_value(); });
}

Synchronizer::Synchronizer(std::vector<std::string> camera_ids, int lag, int first_frame)
    : ids_(std::move(camera_ids)), lag_(lag), next_(first_frame) {
  if (ids_.empty()) throw Error(ErrorCode::kValidation, "Synchronizer: no cameras");
  if (lag_ < 1) throw Error(ErrorCode::kValidation, "Synchronizer: lag must be >= 1");
}

SyncOutput Synchronizer::push(const CameraObservations& obs) {
  SyncOutput out;
  const auto it = std::find(ids_.begin(), ids_.end(), obs.camera_id);
  if (it == ids_.end()) {
    throw Error(ErrorCode::kValidation, "Synchronizer: unknown camera '" + obs.camera_id + "'");
  }
  // Late arrivals for frames already emitted or dropped are ignored.
  if (obs.frame_index < next_) return out;
  auto& bundle = pending_[obs.frame_index];
  if (bundle.cameras.empty()) {
    bundle.frame_index = obs.frame_index;
    bundle.cameras.resize(ids_.size());
  }
  bundle.cameras[static_cast<std::size_t>(it - ids_.begin())] = obs;
  latest_ = std::max(latest_, obs.frame_index);
  advance(out, false);
  return out;
}

SyncOutput Synchronizer::flush() {
  SyncOutput out;
  advance(out, true);
  return out;
}

void Synchronizer::advance(SyncOutput& out, bool final) {
  while (final ? next_ <= latest_ : true) {
    auto it = pending_.find(next_);
    const bool have = it != pending_.end();
    if (have && it->second.complete()) {
      out.emitted.push_back(std::move(it->second));
      pending_.erase(it);
      ++emitted_;
    } else if (final || latest_ >= next_ + lag_) {
      FrameBundle partial;
      if (have) {
        partial = std::move(it->second);
        pending_.erase(it);
      } else {
        partial.frame_index = next_;
        partial.cameras.resize(ids_.size());
      }
      out.dropped.push_back(std::move(partial));
      ++dropped_;
    } else {
      break;
    }
    ++next_;
  }
}

}  // namespace ergocam
