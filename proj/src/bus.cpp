#include "ergocam/bus.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <thread>

#include "ergocam/error.hpp"

namespace ergocam {

namespace {

struct Wiring {
  std::map<std::string, std::vector<std::size_t>> subscribers;  // topic -> node indices
  std::map<std::string, int> publisher_count;
  std::vector<int> expected_eos;  // per node
};

Wiring wire(const std::vector<Node*>& nodes) {
  Wiring w;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& t : nodes[i]->subscriptions()) w.subscribers[t].push_back(i);
    for (const auto& t : nodes[i]->publications()) ++w.publisher_count[t];
  }
  w.expected_eos.resize(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& t : nodes[i]->subscriptions()) w.expected_eos[i] += w.publisher_count[t];
  return w;
}

Message end_of_stream(const std::string& topic) {
  Message m;
  m.topic = topic;
  m.frame_index = -1;
  m.payload = EndOfStream{};
  return m;
}

// Single-threaded deterministic dispatch: one global FIFO of deliveries.
class SequentialRuntime : public Publisher {
 public:
  SequentialRuntime(const std::vector<Node*>& nodes, const Wiring& w) : nodes_(nodes), wiring_(w) {
    eos_seen_.resize(nodes.size(), 0);
  }

  void publish(Message m) override {
    auto it = wiring_.subscribers.find(m.topic);
    if (it == wiring_.subscribers.end()) return;
    for (std::size_t idx : it->second) queue_.emplace_back(idx, m);
  }

  void drain() {
    while (!queue_.empty()) {
      auto [idx, m] = std::move(queue_.front());
      queue_.pop_front();
      Node* node = nodes_[idx];
      if (m.end_of_stream()) {
        if (++eos_seen_[idx] == wiring_.expected_eos[idx]) finish(*node);
      } else {
        node->on_message(m, *this);
      }
    }
  }

  void finish(Node& node) {
    node.on_end(*this);
    for (const auto& t : node.publications()) publish(end_of_stream(t));
  }

 private:
  const std::vector<Node*>& nodes_;
  const Wiring& wiring_;
  std::deque<std::pair<std::size_t, Message>> queue_;
  std::vector<int> eos_seen_;
};

void run_sequential(const std::vector<Node*>& nodes, const Wiring& w) {
  SequentialRuntime rt(nodes, w);
  std::vector<SourceNode*> active;
  for (Node* n : nodes)
    if (auto* s = dynamic_cast<SourceNode*>(n)) active.push_back(s);
  while (!active.empty()) {
    for (auto it = active.begin(); it != active.end();) {
      if ((*it)->produce(rt)) {
        ++it;
      } else {
        rt.finish(**it);
        it = active.erase(it);
      }
      rt.drain();
    }
  }
  rt.drain();
}

class ActorRuntime : public Publisher {
 public:
  ActorRuntime(const std::vector<Node*>& nodes, const Wiring& w) : nodes_(nodes), wiring_(w) {
    for (Node* n : nodes) inboxes_.push_back(std::make_unique<BoundedQueue<Message>>(n->inbox_capacity()));
  }

  void publish(Message m) override {
    auto it = wiring_.subscribers.find(m.topic);
    if (it == wiring_.subscribers.end()) return;
    for (std::size_t idx : it->second) inboxes_[idx]->push(m);
  }

  void run() {
    std::vector<std::thread> threads;
    threads.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      threads.emplace_back([this, i] { guarded([&] { actor_loop(i); }); });
    }
    for (auto& t : threads) t.join();
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void actor_loop(std::size_t i) {
    Node& node = *nodes_[i];
    if (auto* source = dynamic_cast<SourceNode*>(&node)) {
      while (!aborted_ && source->produce(*this)) {
      }
      finish(node);
      return;
    }
    int eos = 0;
    Message m;
    while (!aborted_ && inboxes_[i]->pop(m)) {
      if (m.end_of_stream()) {
        if (++eos == wiring_.expected_eos[i]) {
          finish(node);
          return;
        }
      } else {
        node.on_message(m, *this);
      }
    }
  }

  void finish(Node& node) {
    if (aborted_) return;
    node.on_end(*this);
    for (const auto& t : node.publications()) publish(end_of_stream(t));
  }

  void guarded(const std::function<void()>& body) {
    try {
      body();
    } catch (...) {
      std::lock_guard lock(error_mutex_);
      if (!error_) error_ = std::current_exception();
      aborted_ = true;
      for (auto& q : inboxes_) q->close();
    }
  }

  const std::vector<Node*>& nodes_;
  const Wiring& wiring_;
  std::vector<std::unique_ptr<BoundedQueue<Message>>> inboxes_;
  std::atomic<bool> aborted_{false};
  std::mutex error_mutex_;
  std::exception_ptr error_;
};

}  // namespace

std::string_view to_string(SchedulerMode mode) {
  return mode == SchedulerMode::kActors ? "actors" : "single-threaded";
}

void validate_graph(const std::vector<Node*>& nodes) {
  const Wiring w = wire(nodes);
  for (const auto& [topic, count] : w.publisher_count) {
    if (!w.subscribers.contains(topic)) {
      throw Error(ErrorCode::kValidation, "node graph: topic '" + topic + "' has no subscriber");
    }
  }
  for (const auto& [topic, subs] : w.subscribers) {
    if (!w.publisher_count.contains(topic)) {
      throw Error(ErrorCode::kValidation, "node graph: topic '" + topic + "' has no publisher");
    }
  }
  for (Node* n : nodes) {
    if (n->subscriptions().empty() && dynamic_cast<SourceNode*>(n) == nullptr) {
      throw Error(ErrorCode::kValidation, "node graph: node '" + n->name() + "' has no input");
    }
  }
  // Cycle check by depth-first search over node -> subscriber edges.
  std::vector<int> state(nodes.size(), 0);
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    state[i] = 1;
    for (const auto& t : nodes[i]->publications()) {
      auto it = w.subscribers.find(t);
      if (it == w.subscribers.end()) continue;
      for (std::size_t j : it->second) {
        if (state[j] == 1) {
          throw Error(ErrorCode::kValidation, "node graph: cycle through '" + nodes[j]->name() + "'");
        }
        if (state[j] == 0) visit(j);
      }
    }
    state[i] = 2;
  };
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (state[i] == 0) visit(i);
}

void run_graph(const std::vector<Node*>& nodes, SchedulerMode mode) {
  validate_graph(nodes);
  const Wiring w = wire(nodes);
  if (mode == SchedulerMode::kSingleThreaded) {
    run_sequential(nodes, w);
  } else {
    ActorRuntime(nodes, w).run();
  }
}

}  // namespace ergocam
