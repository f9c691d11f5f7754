#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "nezha/core/error.hpp"
#include "nezha/core/types.hpp"
#include "nezha/transport/frame.hpp"
#include "nezha/util/queue.hpp"

namespace nezha {

namespace detail {

// Shared completion state behind SendHandle.
struct SendState {
  std::mutex mutex;
  std::condition_variable cv;
  bool done = false;
  std::exception_ptr error;

  void complete() {
    {
      std::lock_guard lock(mutex);
      done = true;
    }
    cv.notify_all();
  }

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(mutex);
      done = true;
      error = e;
    }
    cv.notify_all();
  }
};

}  // namespace detail

// Completion handle for a queued send. Default-constructed handles report
// immediate success.
class SendHandle {
 public:
  SendHandle() = default;
  explicit SendHandle(std::shared_ptr<detail::SendState> state) : state_(std::move(state)) {}

  // Blocks until the frame left the channel; rethrows the delivery error.
  void wait() const {
    if (!state_) {
      return;
    }
    std::unique_lock lock(state_->mutex);
    state_->cv.wait(lock, [&] { return state_->done; });
    if (state_->error) {
      std::rethrow_exception(state_->error);
    }
  }

  bool done() const {
    if (!state_) {
      return true;
    }
    std::lock_guard lock(state_->mutex);
    return state_->done;
  }

 private:
  std::shared_ptr<detail::SendState> state_;
};

struct RoutedFrame {
  int rail = 0;
  int peer = 0;
  Frame frame;
};

// Ordered full-duplex frame stream between this rank and one peer on one
// rail. Sends queue per channel and never block the caller; frames are
// delivered in order per channel.
class Channel {
 public:
  Channel(int rail, int peer, int physical_link) : rail_(rail), peer_(peer), link_(physical_link) {}
  virtual ~Channel() = default;

  virtual SendHandle send(Frame frame) = 0;

  // Blocking receive of collective traffic (Data/Ack). Throws
  // ChannelDownError when the peer is gone, Error on timeout.
  virtual Frame recv(std::chrono::microseconds timeout = std::chrono::microseconds(60'000'000)) = 0;

  // Abrupt local teardown; the peer observes channel-down.
  virtual void close() = 0;

  int rail() const { return rail_; }
  int peerRank() const { return peer_; }
  int physicalLink() const { return link_; }

  std::uint64_t dataBytesSent() const { return data_bytes_sent_.load(); }
  std::uint64_t framesSent() const { return frames_sent_.load(); }

 protected:
  void countSend(const Frame& frame) {
    frames_sent_.fetch_add(1, std::memory_order_relaxed);
    if (frame.type == MsgType::Data && (frame.op_seq & kControlOpBit) == 0) {
      data_bytes_sent_.fetch_add(frame.payload.size(), std::memory_order_relaxed);
    }
  }

  int rail_;
  int peer_;
  int link_;
  std::atomic<std::uint64_t> data_bytes_sent_{0};
  std::atomic<std::uint64_t> frames_sent_{0};
};

// Out-of-band delivery hooks. Health beats and channel-down events feed the
// fault monitor; control frames feed the balancer epoch stream; handoff
// frames feed per-rail recovery queues.
struct OutOfBandSinks {
  std::function<void(int rail, int peer)> on_health;
  std::function<void(int rail, int peer)> on_channel_down;
};

// Everything a rank needs to talk to its peers: one channel per (rail,
// peer), ordered deterministically, plus the out-of-band queues.
class ConnectionSet {
 public:
  virtual ~ConnectionSet() = default;

  int rank() const { return rank_; }
  int worldSize() const { return world_size_; }
  const std::vector<RailProfile>& rails() const { return rails_; }

  virtual Channel& channel(int rail, int peer) = 0;

  // Channels of one rail ordered by peer rank.
  std::vector<Channel*> railChannels(int rail) {
    std::vector<Channel*> out;
    for (int peer = 0; peer < world_size_; peer++) {
      if (peer != rank_) {
        out.push_back(&channel(rail, peer));
      }
    }
    return out;
  }

  // Abrupt local teardown of every channel on the rail.
  virtual void closeRail(int rail) = 0;

  // Reconnects a previously closed rail where the transport supports it.
  virtual bool reopenRail(int rail) { (void)rail; return false; }

  void setSinks(OutOfBandSinks sinks) { sinks_ = std::move(sinks); }
  const OutOfBandSinks& sinks() const { return sinks_; }

  BlockingQueue<RoutedFrame>& controlQueue() { return control_queue_; }
  BlockingQueue<RoutedFrame>& handoffQueue(int rail) { return handoff_queues_.at(rail); }

  std::uint64_t dataBytesSentOnRail(int rail) {
    std::uint64_t total = 0;
    for (auto* ch : railChannels(rail)) {
      total += ch->dataBytesSent();
    }
    return total;
  }

  std::uint64_t dataBytesSent() {
    std::uint64_t total = 0;
    for (const auto& rail : rails_) {
      total += dataBytesSentOnRail(rail.rail_id);
    }
    return total;
  }

 protected:
  ConnectionSet(int rank, int world_size, std::vector<RailProfile> rails)
      : rank_(rank), world_size_(world_size), rails_(std::move(rails)) {
    for (const auto& r : rails_) {
      handoff_queues_.try_emplace(r.rail_id);
    }
  }

  void routeHealth(int rail, int peer) {
    if (sinks_.on_health) {
      sinks_.on_health(rail, peer);
    }
  }

  void routeChannelDown(int rail, int peer) {
    if (sinks_.on_channel_down) {
      sinks_.on_channel_down(rail, peer);
    }
  }

  int rank_;
  int world_size_;
  std::vector<RailProfile> rails_;
  OutOfBandSinks sinks_;
  BlockingQueue<RoutedFrame> control_queue_;
  std::map<int, BlockingQueue<RoutedFrame>> handoff_queues_;
};

enum class TransportKind { InMemory, Tcp, Shaped };

TransportKind transportKindFromString(const std::string& name);
const char* toString(TransportKind kind);

class InMemoryFabric;

struct TransportOptions {
  int rank = 0;
  int world_size = 0;
  std::vector<RailProfile> rails;
  TransportKind kind = TransportKind::InMemory;

  // tcp/shaped
  std::string rendezvous_dir;  // falls back to NEZHA_RENDEZVOUS_DIR
  std::chrono::microseconds rendezvous_timeout{30'000'000};
  // One pacer per (rail, peer) by default; sharing a pacer across rails
  // models virtual channels on one physical link.
  bool shared_link_across_rails = false;

  // inmem
  std::shared_ptr<InMemoryFabric> fabric;
};

// Establishes the fully connected per-rail channel mesh. All ranks must call
// with identical rail lists. Deterministic channel ordering by (rail, peer).
std::unique_ptr<ConnectionSet> rendezvous(const TransportOptions& options);

}  // namespace nezha
