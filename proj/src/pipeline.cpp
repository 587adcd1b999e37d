#include "ergocam/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ergocam/error.hpp"
#include "ergocam/triangulation.hpp"

namespace ergocam {

namespace {

constexpr std::uint64_t kWarmupTag = 1;
constexpr std::uint64_t kTaskTag = 2;

using Clock = std::chrono::steady_clock;

struct StatsAccumulator {
  std::mutex mutex;
  RunStats stats;

  void add(double seconds, int frames) {
    std::lock_guard lock(mutex);
    stats.processing_seconds += seconds;
    stats.processed_frames += frames;
  }
  void add_seconds(double seconds) {
    std::lock_guard lock(mutex);
    stats.processing_seconds += seconds;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Message make_message(std::string topic, int frame, double rate, Payload payload) {
  Message m;
  m.topic = std::move(topic);
  m.frame_index = frame;
  m.timestamp = frame / rate;
  m.payload = std::move(payload);
  return m;
}

class SimNode : public SourceNode {
 public:
  SimNode(const GroundTruthSequence& seq, double rate) : seq_(seq), rate_(rate) {}
  std::string name() const override { return "sim"; }
  std::vector<std::string> publications() const override { return {kTopicGroundTruth}; }
  bool produce(Publisher& out) override {
    if (next_ >= seq_.frames.size()) return false;
    const auto& f = seq_.frames[next_];
    out.publish(make_message(kTopicGroundTruth, f.frame_index, rate_, GroundTruthMsg{f, seq_.reachable[next_]}));
    ++next_;
    return true;
  }

 private:
  const GroundTruthSequence& seq_;
  double rate_;
  std::size_t next_ = 0;
};

class CameraNode : public Node {
 public:
  CameraNode(CameraModel<double> cam, double sigma, std::mt19937_64 rng, double rate)
      : cam_(std::move(cam)), sigma_(sigma), rng_(rng), rate_(rate) {}
  std::string name() const override { return "camera:" + cam_.id(); }
  std::vector<std::string> subscriptions() const override { return {kTopicGroundTruth}; }
  std::vector<std::string> publications() const override { return {camera_topic(cam_.id())}; }
  // One pending frame per camera keeps every camera within two frames of the
  // others, so the synchronizer's lag rule only fires on genuinely lost frames.
  std::size_t inbox_capacity() const override { return 1; }
  void on_message(const Message& m, Publisher& out) override {
    const auto& gt = std::get<GroundTruthMsg>(m.payload);
    out.publish(make_message(camera_topic(cam_.id()), m.frame_index, rate_,
                             capture_camera(gt.frame, cam_, sigma_, rng_)));
  }

 private:
  CameraModel<double> cam_;
  double sigma_;
  std::mt19937_64 rng_;
  double rate_;
};

class FusionNode : public Node {
 public:
  FusionNode(FusionContext& ctx, int first_frame, double rate, StatsAccumulator& stats)
      : ctx_(ctx), sync_(ctx.camera_ids(), kSyncLagFrames, first_frame), rate_(rate), stats_(stats) {}
  std::string name() const override { return "fusion"; }
  std::vector<std::string> subscriptions() const override {
    std::vector<std::string> t;
    for (const auto& id : ctx_.camera_ids()) t.push_back(camera_topic(id));
    return t;
  }
  std::vector<std::string> publications() const override { return {kTopicPerRig, kTopicFused}; }
  void on_message(const Message& m, Publisher& out) override {
    handle(sync_.push(std::get<CameraObservations>(m.payload)), out);
  }
  void on_end(Publisher& out) override { handle(sync_.flush(), out); }
  int dropped() const { return sync_.dropped_count(); }

 private:
  void handle(const SyncOutput& s, Publisher& out) {
    for (const auto& bundle : s.emitted) {
      const auto t0 = Clock::now();
      PerRigLandmarks per_rig = triangulate_rigs(ctx_, bundle);
      FusedLandmarks fused = fuse_rigs(ctx_, per_rig);
      stats_.add(seconds_since(t0), 1);
      const int k = bundle.frame_index;
      out.publish(make_message(kTopicPerRig, k, rate_, std::move(per_rig)));
      out.publish(make_message(kTopicFused, k, rate_, std::move(fused)));
    }
  }

  FusionContext& ctx_;
  Synchronizer sync_;
  double rate_;
  StatsAccumulator& stats_;
};

class ErgonomicsNode : public Node {
 public:
  ErgonomicsNode(RulaAdjustments adj, double rate, StatsAccumulator& stats)
      : adj_(adj), rate_(rate), stats_(stats) {}
  std::string name() const override { return "ergonomics"; }
  std::vector<std::string> subscriptions() const override { return {kTopicFused}; }
  std::vector<std::string> publications() const override { return {kTopicRula}; }
  void on_message(const Message& m, Publisher& out) override {
    const auto t0 = Clock::now();
    RulaMsg r = score_frame(std::get<FusedLandmarks>(m.payload).frame, adj_);
    stats_.add_seconds(seconds_since(t0));
    out.publish(make_message(kTopicRula, m.frame_index, rate_, std::move(r)));
  }

 private:
  RulaAdjustments adj_;
  double rate_;
  StatsAccumulator& stats_;
};

class AdaptationCollector : public Node {
 public:
  std::string name() const override { return "adaptation"; }
  std::vector<std::string> subscriptions() const override { return {kTopicFused}; }
  std::vector<std::string> publications() const override { return {}; }
  void on_message(const Message& m, Publisher&) override {
    frames_.push_back(std::get<FusedLandmarks>(m.payload).frame);
  }
  const std::vector<LandmarkFrame>& frames() const { return frames_; }

 private:
  std::vector<LandmarkFrame> frames_;
};

struct RecordingSink {
  RunRecording* memory = nullptr;
  RecordingWriter* writer = nullptr;

  template <typename R, typename Member>
  void put(R record, Member member) {
    if (writer) writer->write(record);
    if (memory) (memory->*member).push_back(std::move(record));
  }
};

class RecorderNode : public Node {
 public:
  RecorderNode(const FusionContext& ctx, std::string segment, int first_frame, std::vector<RecordingSink> sinks)
      : camera_ids_(ctx.camera_ids()),
        segment_(std::move(segment)),
        sync_(camera_ids_, kSyncLagFrames, first_frame),
        sinks_(std::move(sinks)) {}
  std::string name() const override { return "recorder"; }
  std::vector<std::string> subscriptions() const override {
    std::vector<std::string> t = {kTopicGroundTruth, kTopicPerRig, kTopicFused, kTopicRula};
    for (const auto& id : camera_ids_) t.push_back(camera_topic(id));
    return t;
  }
  std::vector<std::string> publications() const override { return {}; }
  std::size_t inbox_capacity() const override { return 256; }

  void on_message(const Message& m, Publisher&) override {
    if (const auto* gt = std::get_if<GroundTruthMsg>(&m.payload)) {
      for (auto& s : sinks_) s.put(GroundTruthRecord{segment_, gt->frame, gt->reachable}, &RunRecording::ground_truth);
    } else if (const auto* obs = std::get_if<CameraObservations>(&m.payload)) {
      write_observations(sync_.push(*obs));
    } else if (const auto* pr = std::get_if<PerRigLandmarks>(&m.payload)) {
      for (auto& s : sinks_)
        for (const auto& e : pr->rigs) s.put(PerRigRecord{segment_, pr->frame_index, e}, &RunRecording::per_rig);
    } else if (const auto* fu = std::get_if<FusedLandmarks>(&m.payload)) {
      for (auto& s : sinks_) s.put(FusedRecord{segment_, *fu}, &RunRecording::fused);
    } else if (const auto* ru = std::get_if<RulaMsg>(&m.payload)) {
      for (auto& s : sinks_) {
        s.put(RulaRecord{segment_, *ru}, &RunRecording::rula);
        // The score is the last record of a frame.
        if (s.writer) s.writer->flush();
      }
    }
  }

  void on_end(Publisher&) override {
    write_observations(sync_.flush());
    for (auto& s : sinks_)
      if (s.writer) s.writer->flush();
  }

 private:
  void write_observations(const SyncOutput& out) {
    // Dropped frames are still recorded with whatever cameras delivered.
    std::vector<const FrameBundle*> all;
    for (const auto& b : out.emitted) all.push_back(&b);
    for (const auto& b : out.dropped) all.push_back(&b);
    std::sort(all.begin(), all.end(), [](auto* a, auto* b) { return a->frame_index < b->frame_index; });
    for (const FrameBundle* b : all)
      for (const auto& cam : b->cameras)
        if (cam)
          for (auto& s : sinks_) s.put(ObservationRecord{segment_, *cam}, &RunRecording::observations);
  }

  std::vector<std::string> camera_ids_;
  std::string segment_;
  Synchronizer sync_;
  std::vector<RecordingSink> sinks_;
};

struct SegmentOutcome {
  int dropped = 0;
  int fused = 0;
};

SegmentOutcome run_segment(FusionContext& ctx, const Scenario& s, std::uint64_t seed, std::uint64_t tag,
                           const std::string& segment, const GroundTruthSequence& gt,
                           std::vector<RecordingSink> sinks, AdaptationCollector* collector,
                           SchedulerMode mode, StatsAccumulator& stats) {
  if (gt.frames.empty()) return {};
  const int first = gt.frames.front().frame_index;
  SimNode sim(gt, s.frame_rate);
  std::vector<std::unique_ptr<CameraNode>> cams;
  std::size_t cam_index = 0;
  for (std::size_t r = 0; r < ctx.rigs().size(); ++r) {
    const auto& rig = ctx.rigs()[r];
    const double sigma = s.rigs[r].noise_sigma;
    for (const auto* cam : {&rig.left, &rig.right}) {
      cams.push_back(std::make_unique<CameraNode>(*cam, sigma, camera_rng(seed, cam_index++, tag), s.frame_rate));
    }
  }
  FusionNode fusion(ctx, first, s.frame_rate, stats);
  ErgonomicsNode ergo(s.adjustments, s.frame_rate, stats);
  RecorderNode recorder(ctx, segment, first, std::move(sinks));

  std::vector<Node*> nodes = {&sim};
  for (auto& c : cams) nodes.push_back(c.get());
  nodes.push_back(&fusion);
  nodes.push_back(&ergo);
  nodes.push_back(&recorder);
  if (collector) nodes.push_back(collector);
  run_graph(nodes, mode);

  SegmentOutcome out;
  out.dropped = fusion.dropped();
  out.fused = static_cast<int>(gt.frames.size()) - out.dropped;
  return out;
}

}  // namespace

FusionContext::FusionContext(std::vector<StereoRig<double>> rigs) : rigs_(std::move(rigs)) {
  if (rigs_.empty()) throw Error(ErrorCode::kValidation, "FusionContext: no rigs");
  rig_positions_.resize(static_cast<Eigen::Index>(rigs_.size()), 3);
  for (std::size_t j = 0; j < rigs_.size(); ++j)
    rig_positions_.row(static_cast<Eigen::Index>(j)) = rigs_[j].left.position().transpose();
}

std::vector<std::string> FusionContext::camera_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : rigs_) {
    ids.push_back(r.left.id());
    ids.push_back(r.right.id());
  }
  return ids;
}

std::vector<std::string> FusionContext::rig_ids() const {
  std::vector<std::string> ids;
  for (const auto& r : rigs_) ids.push_back(r.id);
  return ids;
}

const FusionContext::Solver& FusionContext::solver_for(const Visibility& visibility) {
  const std::uint64_t h = visibility_hash(visibility);
  std::lock_guard lock(mutex_);
  auto it = cache_.find(h);
  if (it == cache_.end()) {
    auto s = std::make_unique<Solver>();
    s->topology = build_topology<double>(visibility);
    s->solver = prefactor(s->topology);
    ++prefactor_count_;
    it = cache_.emplace(h, std::move(s)).first;
  }
  return *it->second;
}

PerRigLandmarks triangulate_rigs(const FusionContext& ctx, const FrameBundle& bundle) {
  PerRigLandmarks out;
  out.frame_index = bundle.frame_index;
  const auto& rigs = ctx.rigs();
  if (bundle.cameras.size() != 2 * rigs.size()) {
    throw Error(ErrorCode::kValidation, "triangulate_rigs: bundle does not match rig count");
  }
  for (std::size_t j = 0; j < rigs.size(); ++j) {
    RigEstimate est;
    est.rig_id = rigs[j].id;
    est.landmarks.frame_index = bundle.frame_index;
    est.residual.fill(std::numeric_limits<double>::quiet_NaN());
    const auto& left = bundle.cameras[2 * j];
    const auto& right = bundle.cameras[2 * j + 1];
    if (left && right) {
      for (int i = 0; i < kLandmarkCount; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!left->visible[k] || !right->visible[k]) continue;
        const std::vector<Observation2D<double>> obs = {make_observation(rigs[j].left, left->uv[k]),
                                                        make_observation(rigs[j].right, right->uv[k])};
        try {
          const auto p = triangulate_dlt(obs);
          est.landmarks.set(i, p.xyz);
          est.residual[k] = p.residual_norm;
        } catch (const Error&) {
          // Degenerate views leave the landmark unobserved for this rig.
        }
      }
    }
    out.rigs.push_back(std::move(est));
  }
  return out;
}

FusedLandmarks fuse_rigs(FusionContext& ctx, const PerRigLandmarks& per_rig) {
  FusedLandmarks out;
  out.frame.frame_index = per_rig.frame_index;
  out.rig_ids = ctx.rig_ids();
  const auto m = static_cast<Eigen::Index>(per_rig.rigs.size());

  std::vector<int> covered;
  for (int i = 0; i < kFusedLandmarkCount; ++i) {
    for (const auto& r : per_rig.rigs) {
      if (r.landmarks.present[static_cast<std::size_t>(i)]) {
        covered.push_back(i);
        break;
      }
    }
  }
  if (!covered.empty()) {
    const auto n = static_cast<Eigen::Index>(covered.size());
    Visibility vis(m, n);
    std::vector<MatX3<double>> estimates(per_rig.rigs.size(), MatX3<double>(n, 3));
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& lm = per_rig.rigs[static_cast<std::size_t>(j)].landmarks;
      for (Eigen::Index c = 0; c < n; ++c) {
        const int i = covered[static_cast<std::size_t>(c)];
        vis(j, c) = lm.present[static_cast<std::size_t>(i)];
        estimates[static_cast<std::size_t>(j)].row(c) = lm.positions.row(i);
      }
    }
    const auto& s = ctx.solver_for(vis);
    const auto anchors = compute_anchors(estimates, vis, MatX3<double>(ctx.rig_positions()));
    const auto delta = compute_delta(s.topology, anchors.stacked());
    const MatX3<double> fused = fuse(s.solver, delta, anchors);
    for (Eigen::Index c = 0; c < n; ++c) out.frame.set(covered[static_cast<std::size_t>(c)], fused.row(c).transpose());
    out.rig_nodes = fused.bottomRows(m);
  }

  for (int i = kFusedLandmarkCount; i < kLandmarkCount; ++i) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    int count = 0;
    for (const auto& r : per_rig.rigs) {
      if (!r.landmarks.present[static_cast<std::size_t>(i)]) continue;
      sum += r.landmarks.positions.row(i).transpose();
      ++count;
    }
    if (count > 0) out.frame.set(i, sum / count);
  }
  return out;
}

RulaMsg score_frame(const LandmarkFrame& fused, const RulaAdjustments& adj) {
  RulaMsg r;
  r.frame_index = fused.frame_index;
  r.angles = compute_joint_angles(fused);
  r.breakdown = rula_score(r.angles, adj);
  r.status = classify_posture(r.breakdown);
  return r;
}

std::mt19937_64 camera_rng(std::uint64_t seed, std::size_t camera_index, std::uint64_t segment_tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(camera_index), static_cast<std::uint32_t>(segment_tag)};
  return std::mt19937_64(seq);
}

const RobotDeliveryParams& AdaptationController::apply(AnthropometricClass c) {
  params_ = adapt_robot(c, params_);
  return params_;
}

RunResult run_scenario(const Scenario& s, std::uint64_t seed, const RunOptions& options) {
  s.validate();
  if (s.statures.size() != 1) {
    throw Error(ErrorCode::kValidation, "run_scenario: expected one stature, got " + std::to_string(s.statures.size()));
  }
  const double stature = s.statures.front();
  const AnthropometricProfile profile = build_skeleton(stature);
  std::vector<StereoRig<double>> rigs;
  for (const auto& rc : s.rigs) rigs.push_back(rc.make_rig());
  FusionContext ctx(std::move(rigs));
  StatsAccumulator stats;

  MotionScript warmup;
  warmup.frame_rate = s.frame_rate;
  if (s.warmup_s > 0) warmup.phases = {{"warmup", s.warmup_s, TargetKind::kRest, {}}};
  MotionScript task = s.motion;
  task.frame_rate = s.frame_rate;
  const GroundTruthSequence gt_warmup = animate(profile, warmup, s.default_delivery, s.engagement, 0);
  const int warmup_frames = static_cast<int>(gt_warmup.frames.size());
  const int task_frames = task.frame_count();

  RunResult result;
  for (auto* rec : {&result.pre, &result.post}) {
    auto& m = rec->manifest;
    m.run_id = run_id(stature, seed);
    m.phase = rec == &result.pre ? "pre" : "post";
    m.stature = stature;
    m.seed = seed;
    m.scheduler = std::string(to_string(options.scheduler));
    m.scenario_json = scenario_to_json(s);
    m.rig_ids = ctx.rig_ids();
    m.delivery_point = s.default_delivery;
    m.warmup_frames = warmup_frames;
    m.task_frames = task_frames;
  }

  std::unique_ptr<RecordingWriter> pre_writer, post_writer;
  if (options.out_root) {
    pre_writer = std::make_unique<RecordingWriter>(*options.out_root / "pre" / result.pre.manifest.run_id,
                                                   result.pre.manifest);
    post_writer = std::make_unique<RecordingWriter>(*options.out_root / "post" / result.post.manifest.run_id,
                                                    result.post.manifest);
  }
  RunRecording* pre_mem = options.keep_in_memory ? &result.pre : nullptr;
  RunRecording* post_mem = options.keep_in_memory ? &result.post : nullptr;
  const RecordingSink pre_sink{pre_mem, pre_writer.get()};
  const RecordingSink post_sink{post_mem, post_writer.get()};

  AdaptationCollector collector;
  const SegmentOutcome warm = run_segment(ctx, s, seed, kWarmupTag, kSegmentWarmup, gt_warmup,
                                          {pre_sink, post_sink}, &collector, options.scheduler, stats);

  // Adaptation decision on the control thread, between warm-up and task.
  RobotDeliveryParams defaults;
  defaults.delivery_point = s.default_delivery;
  AdaptationController controller(defaults);
  AdaptationEvent& event = result.adaptation;
  event.default_params = defaults;
  event.estimated_height = std::numeric_limits<double>::quiet_NaN();
  for (const auto& f : collector.frames())
    if (f.fused_complete() && f.has(Landmark::kHeadTop) && compute_joint_angles(f).trunk_flexion < kUprightTrunkDeg)
      ++event.upright_frames;
  try {
    event.estimated_height = estimate_height(collector.frames());
    event.height_class = classify_height(event.estimated_height);
    if (s.adapt) controller.apply(event.height_class);
  } catch (const Error&) {
    if (s.adapt) throw;
  }
  event.chosen = controller.params();

  const GroundTruthSequence gt_pre = animate(profile, task, s.default_delivery, s.engagement, warmup_frames);
  const GroundTruthSequence gt_post =
      animate(profile, task, event.chosen.delivery_point, s.engagement, warmup_frames);
  const SegmentOutcome pre = run_segment(ctx, s, seed, kTaskTag, kSegmentTask, gt_pre, {pre_sink}, nullptr,
                                         options.scheduler, stats);
  const SegmentOutcome post = run_segment(ctx, s, seed, kTaskTag, kSegmentTask, gt_post, {post_sink}, nullptr,
                                          options.scheduler, stats);

  const auto finish = [&](RunRecording& rec, const SegmentOutcome& seg, RecordingWriter* writer,
                          const Eigen::Vector3d& delivery) {
    auto& m = rec.manifest;
    m.delivery_point = delivery;
    m.adaptation = event;
    m.dropped_frames = warm.dropped + seg.dropped;
    m.fused_frames = warm.fused + seg.fused;
    if (options.keep_in_memory) {
      const auto streams = serialize_streams(rec);
      m.file_digests.clear();
      for (const auto& [name, content] : streams) m.file_digests[name] = sha256_hex(content);
      m.digest = streams_digest(streams);
      m.status = "complete";
    }
    if (writer) writer->finalize(m);
  };
  finish(result.pre, pre, pre_writer.get(), s.default_delivery);
  finish(result.post, post, post_writer.get(), event.chosen.delivery_point);

  result.stats = stats.stats;
  result.stats.prefactor_count = ctx.prefactor_count();
  return result;
}

}  // namespace ergocam
