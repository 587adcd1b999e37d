#pragma once

// In-process publish/subscribe runtime.
//
// Nodes declare the topics they consume and produce. Every node sees each
// topic in publication order. A node finishes once every publisher of every
// topic it consumes has sent end-of-stream; it then runs on_end and forwards
// end-of-stream on its own topics.

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "ergocam/messages.hpp"

namespace ergocam {

class Publisher {
 public:
  virtual ~Publisher() = default;
  virtual void publish(Message message) = 0;
};

class Node {
 public:
  virtual ~Node() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::string> subscriptions() const = 0;
  virtual std::vector<std::string> publications() const = 0;
  virtual void on_message(const Message& message, Publisher& out) = 0;
  virtual void on_end(Publisher&) {}
  virtual std::size_t inbox_capacity() const { return 64; }
};

/// A node without subscriptions that produces messages on demand.
class SourceNode : public Node {
 public:
  std::vector<std::string> subscriptions() const override { return {}; }
  void on_message(const Message&, Publisher&) override {}
  /// Publishes the next batch; returns false once exhausted.
  virtual bool produce(Publisher& out) = 0;
};

enum class SchedulerMode { kSingleThreaded, kActors };

std::string_view to_string(SchedulerMode mode);

/// Rejects graphs with unconsumed or unproduced topics, cycles, or
/// subscription-free nodes that are not sources.
void validate_graph(const std::vector<Node*>& nodes);

void run_graph(const std::vector<Node*>& nodes, SchedulerMode mode);

/// Bounded FIFO used for actor inboxes. close() wakes every waiter; push on a
/// closed queue is dropped and pop returns false once drained.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  bool pop(T& out) {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
};

}  // namespace ergocam
