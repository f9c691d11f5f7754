#include "nezha/transport/inmem.hpp"

#include <stdexcept>

namespace nezha {

namespace {
class InMemoryConnectionSetImpl;
}

class InMemoryChannel : public Channel {
 public:
  InMemoryChannel(InMemoryFabric& fabric, int rail, int self, int peer)
      : Channel(rail, peer, rail),
        fabric_(fabric),
        self_(self),
        outgoing_(&fabric.endpoint(rail, self, peer)),
        incoming_(&fabric.endpoint(rail, peer, self)) {}

  SendHandle send(Frame frame) override {
    auto state = std::make_shared<detail::SendState>();
    auto& rail_state = fabric_.railState(rail_);
    if (!rail_state.alive.load(std::memory_order_acquire)) {
      state->fail(std::make_exception_ptr(
          ChannelDownError(rail_, peer_, "rail is down")));
      return SendHandle(state);
    }
    if (frame.type == MsgType::Data && (frame.op_seq & kControlOpBit) == 0) {
      const auto index = rail_state.data_frames_sent.fetch_add(1) + 1;
      const auto fail_at = rail_state.fail_at_frame.load(std::memory_order_acquire);
      if (fail_at != 0 && index >= fail_at) {
        fabric_.killRail(rail_);
        state->fail(std::make_exception_ptr(
            ChannelDownError(rail_, peer_, "scripted rail failure")));
        return SendHandle(state);
      }
    }
    countSend(frame);
    deliver(std::move(frame));
    state->complete();
    return SendHandle(state);
  }

  Frame recv(std::chrono::microseconds timeout) override {
    auto frame = incoming_->data.popFor(timeout);
    if (!frame) {
      if (incoming_->data.closed() || !fabric_.railState(rail_).alive.load()) {
        throw ChannelDownError(rail_, peer_, "rail is down");
      }
      throw Error("recv timeout on rail " + std::to_string(rail_) + " peer " +
                  std::to_string(peer_));
    }
    return *std::move(frame);
  }

  void close() override { fabric_.killRail(rail_); }

  void resetEndpoints() {
    outgoing_ = &fabric_.endpoint(rail_, self_, peer_);
    incoming_ = &fabric_.endpoint(rail_, peer_, self_);
  }

 private:
  void deliver(Frame frame);

  InMemoryFabric& fabric_;
  int self_;
  InMemoryFabric::Endpoint* outgoing_;
  InMemoryFabric::Endpoint* incoming_;
};

namespace {

class InMemoryConnectionSetImpl : public ConnectionSet {
 public:
  InMemoryConnectionSetImpl(InMemoryFabric& fabric, int rank, int world_size,
                            std::vector<RailProfile> rails)
      : ConnectionSet(rank, world_size, std::move(rails)), fabric_(fabric) {
    for (const auto& rail : rails_) {
      for (int peer = 0; peer < world_size; peer++) {
        if (peer == rank) {
          continue;
        }
        channels_[{rail.rail_id, peer}] =
            std::make_unique<InMemoryChannel>(fabric, rail.rail_id, rank, peer);
      }
    }
  }

  Channel& channel(int rail, int peer) override {
    auto it = channels_.find({rail, peer});
    if (it == channels_.end()) {
      throw std::invalid_argument("no channel for rail " + std::to_string(rail) +
                                  " peer " + std::to_string(peer));
    }
    return *it->second;
  }

  void closeRail(int rail) override { fabric_.killRail(rail); }

  bool reopenRail(int rail) override {
    if (!fabric_.railAlive(rail)) {
      return false;
    }
    handoffQueue(rail).reopen();
    for (auto& [key, ch] : channels_) {
      if (key.first == rail) {
        ch->resetEndpoints();
      }
    }
    return true;
  }

  // Routing entry points used by the fabric.
  void deliverHealth(int rail, int peer) { routeHealth(rail, peer); }
  void deliverControl(RoutedFrame routed) { control_queue_.push(std::move(routed)); }
  void deliverHandoff(RoutedFrame routed) {
    handoff_queues_.at(routed.rail).push(std::move(routed));
  }
  void deliverRailDown(int rail) {
    for (int peer = 0; peer < world_size_; peer++) {
      if (peer != rank_) {
        routeChannelDown(rail, peer);
      }
    }
  }

 private:
  InMemoryFabric& fabric_;
  std::map<std::pair<int, int>, std::unique_ptr<InMemoryChannel>> channels_;
};

}  // namespace

void InMemoryChannel::deliver(Frame frame) {
  // Health, handoff and control frames bypass the data stream so receivers
  // never have to demultiplex them out of collective traffic.
  InMemoryConnectionSetImpl* peer_set = nullptr;
  {
    std::lock_guard lock(fabric_.registry_mutex_);
    auto it = fabric_.connected_.find(peer_);
    if (it != fabric_.connected_.end()) {
      peer_set = static_cast<InMemoryConnectionSetImpl*>(it->second);
    }
  }
  switch (frame.type) {
    case MsgType::Health:
      if (peer_set) {
        peer_set->deliverHealth(rail_, self_);
      }
      return;
    case MsgType::Handoff:
      if (peer_set) {
        peer_set->deliverHandoff({rail_, self_, std::move(frame)});
      }
      return;
    case MsgType::Data:
      if ((frame.op_seq & kControlOpBit) != 0) {
        if (peer_set) {
          peer_set->deliverControl({rail_, self_, std::move(frame)});
        }
        return;
      }
      break;
    case MsgType::Ack:
      break;
  }
  outgoing_->data.push(std::move(frame));
}

InMemoryFabric::InMemoryFabric(int world_size, std::vector<RailProfile> rails)
    : world_size_(world_size), rails_(std::move(rails)) {
  for (const auto& rail : rails_) {
    rail_states_[rail.rail_id] = std::make_unique<RailState>();
    for (int a = 0; a < world_size; a++) {
      for (int b = 0; b < world_size; b++) {
        if (a != b) {
          endpoints_[{rail.rail_id, a, b}] = std::make_unique<Endpoint>();
        }
      }
    }
  }
}

std::unique_ptr<ConnectionSet> InMemoryFabric::connect(int rank) {
  if (world_size_ < 2) {
    throw std::invalid_argument("rendezvous requires at least 2 ranks");
  }
  auto set = std::make_unique<InMemoryConnectionSetImpl>(*this, rank, world_size_, rails_);
  {
    std::lock_guard lock(registry_mutex_);
    connected_[rank] = set.get();
  }
  return set;
}

InMemoryFabric::Endpoint& InMemoryFabric::endpoint(int rail, int from, int to) {
  std::lock_guard lock(registry_mutex_);
  auto it = endpoints_.find({rail, from, to});
  if (it == endpoints_.end()) {
    throw std::invalid_argument("no endpoint for rail " + std::to_string(rail));
  }
  return *it->second;
}

InMemoryFabric::RailState& InMemoryFabric::railState(int rail) {
  auto it = rail_states_.find(rail);
  if (it == rail_states_.end()) {
    throw std::invalid_argument("unknown rail " + std::to_string(rail));
  }
  return *it->second;
}

void InMemoryFabric::failRailAtFrame(int rail, std::uint64_t frame_index) {
  railState(rail).fail_at_frame.store(
      railState(rail).data_frames_sent.load() + frame_index, std::memory_order_release);
}

void InMemoryFabric::killRail(int rail) {
  auto& state = railState(rail);
  bool was_alive = state.alive.exchange(false);
  {
    std::lock_guard lock(registry_mutex_);
    for (auto& [key, ep] : endpoints_) {
      if (std::get<0>(key) == rail) {
        ep->data.close();
      }
    }
  }
  if (was_alive) {
    notifyRailDown(rail);
  }
}

void InMemoryFabric::restoreRail(int rail) {
  auto& state = railState(rail);
  {
    std::lock_guard lock(registry_mutex_);
    for (auto& [key, ep] : endpoints_) {
      if (std::get<0>(key) == rail) {
        ep->data.reopen();
      }
    }
  }
  state.fail_at_frame.store(0);
  state.alive.store(true, std::memory_order_release);
}

bool InMemoryFabric::railAlive(int rail) const {
  return const_cast<InMemoryFabric*>(this)->railState(rail).alive.load();
}

void InMemoryFabric::notifyRailDown(int rail) {
  std::vector<ConnectionSet*> sets;
  {
    std::lock_guard lock(registry_mutex_);
    for (auto& [rank, set] : connected_) {
      sets.push_back(set);
    }
  }
  for (auto* set : sets) {
    static_cast<InMemoryConnectionSetImpl*>(set)->deliverRailDown(rail);
  }
}

}  // namespace nezha
