#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>

#include "nezha/transport/transport.hpp"

namespace nezha {

// Deterministic in-process transport. All ranks share one fabric; a send is
// an enqueue on the peer's receive queue and completes immediately. Supports
// scripted failure injection per rail.
class InMemoryFabric {
 public:
  InMemoryFabric(int world_size, std::vector<RailProfile> rails);

  // Builds one rank's view of the mesh. Call once per rank.
  std::unique_ptr<ConnectionSet> connect(int rank);

  // The k-th (1-based) Data frame sent anywhere on the rail fails and the
  // rail goes down fabric-wide.
  void failRailAtFrame(int rail, std::uint64_t frame_index);

  // Immediate fabric-wide teardown of the rail.
  void killRail(int rail);

  // Reopens a previously killed rail with fresh queues.
  void restoreRail(int rail);

  bool railAlive(int rail) const;

  int worldSize() const { return world_size_; }
  const std::vector<RailProfile>& rails() const { return rails_; }

 private:
  friend class InMemoryChannel;
  friend class InMemoryConnectionSet;

  struct RailState {
    std::atomic<bool> alive{true};
    std::atomic<std::uint64_t> data_frames_sent{0};
    std::atomic<std::uint64_t> fail_at_frame{0};  // 0 = no injection
  };

  struct Endpoint {
    BlockingQueue<Frame> data;  // Data/Ack stream, FIFO per channel
  };

  // Key: (rail, from, to).
  using EndpointKey = std::tuple<int, int, int>;

  Endpoint& endpoint(int rail, int from, int to);
  RailState& railState(int rail);
  void notifyRailDown(int rail);

  int world_size_;
  std::vector<RailProfile> rails_;
  std::map<EndpointKey, std::unique_ptr<Endpoint>> endpoints_;
  std::map<int, std::unique_ptr<RailState>> rail_states_;
  std::mutex registry_mutex_;
  std::map<int, ConnectionSet*> connected_;  // rank -> set, for routing
};

}  // namespace nezha
