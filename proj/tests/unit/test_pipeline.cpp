#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "ergocam/bus.hpp"
#include "ergocam/evaluation.hpp"
#include "ergocam/pipeline.hpp"
#include "ergocam/synchronizer.hpp"

using namespace ergocam;

// ------------------------------------------------------------------ bus

namespace {

class Counter : public SourceNode {
 public:
  Counter(std::string topic, int n) : topic_(std::move(topic)), n_(n) {}
  std::string name() const override { return "counter"; }
  std::vector<std::string> publications() const override { return {topic_}; }
  bool produce(Publisher& out) override {
    if (k_ >= n_) return false;
    Message m;
    m.topic = topic_;
    m.frame_index = k_;
    m.timestamp = k_ / 10.0;
    m.payload = GroundTruthMsg{};
    out.publish(std::move(m));
    ++k_;
    return true;
  }

 private:
  std::string topic_;
  int n_, k_ = 0;
};

class Relay : public Node {
 public:
  Relay(std::string in, std::string out, std::size_t cap = 64) : in_(std::move(in)), out_(std::move(out)), cap_(cap) {}
  std::string name() const override { return "relay:" + in_; }
  std::vector<std::string> subscriptions() const override { return {in_}; }
  std::vector<std::string> publications() const override { return {out_}; }
  void on_message(const Message& m, Publisher& out) override {
    Message copy = m;
    copy.topic = out_;
    out.publish(std::move(copy));
  }
  std::size_t inbox_capacity() const override { return cap_; }

 private:
  std::string in_, out_;
  std::size_t cap_;
};

class Sink : public Node {
 public:
  explicit Sink(std::vector<std::string> topics) : topics_(std::move(topics)) {}
  std::string name() const override { return "sink"; }
  std::vector<std::string> subscriptions() const override { return topics_; }
  std::vector<std::string> publications() const override { return {}; }
  void on_message(const Message& m, Publisher&) override { seen.push_back(m); }
  void on_end(Publisher&) override { ended = true; }

  std::vector<Message> seen;
  bool ended = false;

 private:
  std::vector<std::string> topics_;
};

}  // namespace

TEST(Bus, DeliversInOrderInBothModes) {
  for (auto mode : {SchedulerMode::kSingleThreaded, SchedulerMode::kActors}) {
    Counter src("a", 200);
    Relay relay("a", "b", 1);
    Sink sink({"b"});
    run_graph({&src, &relay, &sink}, mode);
    ASSERT_EQ(sink.seen.size(), 200u) << to_string(mode);
    EXPECT_TRUE(sink.ended);
    for (int k = 0; k < 200; ++k) {
      EXPECT_EQ(sink.seen[static_cast<std::size_t>(k)].frame_index, k);
      EXPECT_EQ(sink.seen[static_cast<std::size_t>(k)].topic, "b");
      EXPECT_DOUBLE_EQ(sink.seen[static_cast<std::size_t>(k)].timestamp, k / 10.0);
    }
  }
}

TEST(Bus, ValidateGraphRejectsBadWiring) {
  Counter src("a", 1);
  Relay relay("a", "b");
  Sink sink_b({"b"}), sink_c({"c"});
  EXPECT_NO_THROW(validate_graph({&src, &relay, &sink_b}));
  EXPECT_THROW(validate_graph({&src, &relay}), Error);           // b unconsumed
  EXPECT_THROW(validate_graph({&src, &sink_c}), Error);          // c unproduced, a unconsumed
  Relay loop1("x", "y"), loop2("y", "x");
  EXPECT_THROW(validate_graph({&loop1, &loop2}), Error);          // cycle
  Relay orphan("a", "b");
  Sink nothing({});
  EXPECT_THROW(validate_graph({&src, &orphan, &sink_b, &nothing}), Error);  // node without input
}

TEST(Bus, NodeFailurePropagates) {
  class Boom : public Sink {
   public:
    Boom() : Sink({"a"}) {}
    void on_message(const Message&, Publisher&) override { throw Error(ErrorCode::kIo, "boom"); }
  };
  for (auto mode : {SchedulerMode::kSingleThreaded, SchedulerMode::kActors}) {
    Counter src("a", 50);
    Boom boom;
    EXPECT_THROW(run_graph({&src, &boom}, mode), Error);
  }
}

// --------------------------------------------------------- synchronizer

namespace {

CameraObservations obs(const std::string& cam, int frame) {
  CameraObservations o;
  o.camera_id = cam;
  o.frame_index = frame;
  o.uv[0] = Eigen::Vector2d(frame, cam.size());
  o.visible[0] = true;
  return o;
}

}  // namespace

TEST(Synchronizer, CompleteFrameEmitted) {
  Synchronizer sync({"a", "b", "c"});
  EXPECT_TRUE(sync.push(obs("a", 0)).emitted.empty());
  EXPECT_TRUE(sync.push(obs("c", 0)).emitted.empty());
  const auto out = sync.push(obs("b", 0));
  ASSERT_EQ(out.emitted.size(), 1u);
  EXPECT_EQ(out.emitted[0].frame_index, 0);
  EXPECT_TRUE(out.emitted[0].complete());
  EXPECT_EQ(out.emitted[0].cameras[1]->camera_id, "b");
}

TEST(Synchronizer, SilentCameraDropsFrameAfterLag) {
  Synchronizer sync({"a", "b"}, kSyncLagFrames);
  std::vector<int> emitted, dropped;
  for (int k = 0; k < 8; ++k) {
    for (const char* cam : {"a", "b"}) {
      if (k == 2 && std::string(cam) == "b") continue;
      const auto out = sync.push(obs(cam, k));
      for (const auto& b : out.emitted) emitted.push_back(b.frame_index);
      for (const auto& b : out.dropped) {
        dropped.push_back(b.frame_index);
        // Dropped exactly when frame 2 + lag arrives.
        EXPECT_EQ(k, 2 + kSyncLagFrames);
      }
    }
  }
  EXPECT_EQ(sync.dropped_count(), 1);
  EXPECT_EQ(dropped, std::vector<int>{2});
  EXPECT_EQ(emitted, (std::vector<int>{0, 1, 3, 4, 5, 6, 7}));
}

TEST(Synchronizer, FlushDropsIncompleteTail) {
  Synchronizer sync({"a", "b"});
  sync.push(obs("a", 0));
  sync.push(obs("b", 0));
  sync.push(obs("a", 1));
  const auto out = sync.flush();
  EXPECT_EQ(out.dropped.size(), 1u);
  EXPECT_EQ(sync.emitted_count(), 1);
}

TEST(Synchronizer, UnknownCameraRejected) {
  Synchronizer sync({"a"});
  EXPECT_THROW(sync.push(obs("z", 0)), Error);
}

TEST(Synchronizer, ArrivalOrderWithinFrameIsIrrelevant) {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
  std::vector<CameraObservations> msgs;
  for (int k = 0; k < 5; ++k)
    for (const auto& c : ids) msgs.push_back(obs(c, k));
  const auto collect = [&](const std::vector<CameraObservations>& order) {
    Synchronizer sync(ids);
    std::vector<FrameBundle> out;
    for (const auto& m : order)
      for (auto& b : sync.push(m).emitted) out.push_back(std::move(b));
    return out;
  };
  const auto reference = collect(msgs);
  ASSERT_EQ(reference.size(), 5u);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    auto shuffled = msgs;
    for (int k = 0; k < 5; ++k) std::shuffle(shuffled.begin() + 6 * k, shuffled.begin() + 6 * (k + 1), rng);
    const auto got = collect(shuffled);
    ASSERT_EQ(got.size(), reference.size());
    for (std::size_t f = 0; f < got.size(); ++f) {
      EXPECT_EQ(got[f].frame_index, reference[f].frame_index);
      for (std::size_t c = 0; c < ids.size(); ++c) {
        EXPECT_EQ(got[f].cameras[c]->camera_id, reference[f].cameras[c]->camera_id);
        EXPECT_EQ(got[f].cameras[c]->uv[0], reference[f].cameras[c]->uv[0]);
      }
    }
  }
}

// -------------------------------------------------------------- pipeline

namespace {

Scenario ten_second_scenario(double sigma_scale = 1.0) {
  Scenario s = default_scenario();
  s.motion.phases = {{"rest", 2.0, TargetKind::kRest, {}},
                     {"reach", 3.0, TargetKind::kDelivery, {}},
                     {"hold", 3.0, TargetKind::kDelivery, {}},
                     {"return", 2.0, TargetKind::kRest, {}}};
  for (auto& r : s.rigs) r.noise_sigma *= sigma_scale;
  return s;
}

int count_segment(const std::vector<FusedRecord>& v, const std::string& seg) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const auto& r) { return r.segment == seg; }));
}

}  // namespace

TEST(Pipeline, TenSecondTaskRecordsHundredFrames) {
  const RunResult r = run_scenario(ten_second_scenario(), 1);
  for (const auto* rec : {&r.pre, &r.post}) {
    EXPECT_EQ(rec->manifest.task_frames, 100);
    EXPECT_EQ(count_segment(rec->fused, kSegmentTask), 100);
    EXPECT_EQ(count_segment(rec->fused, kSegmentWarmup), 30);
    EXPECT_EQ(rec->manifest.dropped_frames, 0);
  }
}

TEST(Pipeline, ZeroNoiseMatchesGroundTruth) {
  const RunResult r = run_scenario(ten_second_scenario(0.0), 1);
  for (const auto* rec : {&r.pre, &r.post}) {
    ASSERT_EQ(rec->fused.size(), rec->ground_truth.size());
    for (std::size_t k = 0; k < rec->fused.size(); ++k) {
      const auto& f = rec->fused[k].fused.frame;
      const auto& g = rec->ground_truth[k].frame;
      ASSERT_EQ(f.frame_index, g.frame_index);
      for (int i = 0; i < kLandmarkCount; ++i) {
        if (!g.present[static_cast<std::size_t>(i)]) continue;
        ASSERT_TRUE(f.present[static_cast<std::size_t>(i)]);
        EXPECT_LT((f.positions.row(i) - g.positions.row(i)).norm(), 1e-6) << landmark_name(i);
      }
    }
  }
}

TEST(Pipeline, SingleRigFusionEqualsRig) {
  Scenario s = default_scenario();
  s.rigs.resize(1);
  const RunResult r = run_scenario(s, 4);
  const RmseReport rep = compute_rmse(r.pre);
  ASSERT_EQ(rep.rig.rows(), 1);
  for (int i = 0; i < kFusedLandmarkCount; ++i) EXPECT_NEAR(rep.fused(i), rep.rig(0, i), 1e-9);
}

TEST(Pipeline, DeterministicInBothSchedulerModes) {
  const Scenario s = default_scenario();
  RunOptions single, actors;
  actors.scheduler = SchedulerMode::kActors;
  const RunResult a = run_scenario(s, 7, single);
  const RunResult b = run_scenario(s, 7, single);
  const RunResult c = run_scenario(s, 7, actors);
  const RunResult d = run_scenario(s, 7, actors);
  EXPECT_EQ(a.pre.manifest.digest, b.pre.manifest.digest);
  EXPECT_EQ(a.post.manifest.digest, b.post.manifest.digest);
  EXPECT_EQ(c.pre.manifest.digest, d.pre.manifest.digest);
  EXPECT_EQ(c.post.manifest.digest, d.post.manifest.digest);
  EXPECT_EQ(a.pre.manifest.digest, c.pre.manifest.digest);
  EXPECT_NE(a.pre.manifest.digest, run_scenario(s, 8).pre.manifest.digest);
}

TEST(Pipeline, PrefactorOncePerRun) {
  const RunResult r = run_scenario(ten_second_scenario(), 2);
  EXPECT_EQ(r.stats.prefactor_count, 1);
  EXPECT_EQ(r.stats.processed_frames, 30 + 2 * 100);
}

TEST(Pipeline, FrameIndicesStrictlyIncrease) {
  RunOptions actors;
  actors.scheduler = SchedulerMode::kActors;
  const RunResult r = run_scenario(default_scenario(), 5, actors);
  for (const auto* rec : {&r.pre, &r.post}) {
    for (std::size_t k = 1; k < rec->fused.size(); ++k)
      EXPECT_GT(rec->fused[k].fused.frame.frame_index, rec->fused[k - 1].fused.frame.frame_index);
    for (std::size_t k = 1; k < rec->rula.size(); ++k)
      EXPECT_GT(rec->rula[k].rula.frame_index, rec->rula[k - 1].rula.frame_index);
  }
}

TEST(Pipeline, PrePostShareNoiseAndWarmup) {
  Scenario s = default_scenario();
  s.statures = {1.6};
  const RunResult r = run_scenario(s, 11);
  EXPECT_EQ(r.adaptation.height_class, AnthropometricClass::kC1);
  EXPECT_NEAR(r.adaptation.chosen.delivery_point.z(), 0.818 * 1.60, 1e-12);
  EXPECT_EQ(r.pre.manifest.delivery_point, s.default_delivery);
  // Warm-up records are shared verbatim.
  for (std::size_t k = 0; k < 30; ++k)
    EXPECT_TRUE((r.pre.fused[k].fused.frame.positions.array() == r.post.fused[k].fused.frame.positions.array())
                    .all());
}

TEST(Pipeline, AdaptationDisabledKeepsDefault) {
  Scenario s = default_scenario();
  s.adapt = false;
  s.statures = {1.95};
  const RunResult r = run_scenario(s, 1);
  EXPECT_FALSE(r.adaptation.chosen.adapted);
  EXPECT_EQ(r.adaptation.chosen.delivery_point, s.default_delivery);
  EXPECT_EQ(r.pre.manifest.digest, r.post.manifest.digest);
}

TEST(Pipeline, InvalidScenarioFailsBeforeRunning) {
  Scenario s = default_scenario();
  s.rigs.clear();
  EXPECT_THROW(run_scenario(s, 1), Error);
  s = default_scenario();
  s.statures = {1.6, 1.7};
  EXPECT_THROW(run_scenario(s, 1), Error);
}
