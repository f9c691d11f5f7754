#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <thread>

#include "nezha/transport/inmem.hpp"
#include "nezha/transport/rendezvous.hpp"
#include "nezha/transport/shaping.hpp"
#include "nezha/transport/transport.hpp"

namespace nezha {

namespace {

void setNoDelay(int fd) {
  int flag = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
}

// Returns false when the peer went away.
bool writeAll(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      return false;
    }
    if (n == 0) {
      return false;
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

bool readAll(int fd, std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    ssize_t n = ::recv(fd, data, size, 0);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      return false;
    }
    if (n == 0) {
      return false;
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

std::pair<std::string, std::uint16_t> splitHostPort(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("bad address: " + addr);
  }
  return {addr.substr(0, colon),
          static_cast<std::uint16_t>(std::stoi(addr.substr(colon + 1)))};
}

class TcpConnectionSet;

struct QueuedSend {
  Frame frame;
  std::shared_ptr<detail::SendState> state;
};

// One socket per channel; a writer thread drains the send queue (applying
// shaping when configured) and a reader thread demultiplexes inbound frames.
class TcpChannel : public Channel {
 public:
  TcpChannel(TcpConnectionSet& owner, int rail, int peer, int link,
             const RailProfile* shaping, LinkPacer* pacer)
      : Channel(rail, peer, link), owner_(owner), shaping_(shaping), pacer_(pacer) {}

  ~TcpChannel() override {
    close();
    joinThreads();
  }

  void attach(int fd) {
    std::lock_guard lock(lifecycle_mutex_);
    joinThreadsLocked();
    fd_ = fd;
    setNoDelay(fd_);
    down_.store(false);
    down_reported_.store(false);
    recv_queue_.reopen();
    send_queue_.reopen();
    writer_ = std::thread([this] { writerLoop(); });
    reader_ = std::thread([this] { readerLoop(); });
  }

  SendHandle send(Frame frame) override {
    auto state = std::make_shared<detail::SendState>();
    if (down_.load(std::memory_order_acquire)) {
      state->fail(std::make_exception_ptr(ChannelDownError(rail_, peer_, "channel is down")));
      return SendHandle(state);
    }
    if (frame.type == MsgType::Health) {
      // Heartbeats jump the queue and skip shaping so a saturated link does
      // not read as a dead one.
      send_queue_.pushFront({std::move(frame), state});
    } else {
      send_queue_.push({std::move(frame), state});
    }
    return SendHandle(state);
  }

  Frame recv(std::chrono::microseconds timeout) override {
    auto frame = recv_queue_.popFor(timeout);
    if (!frame) {
      if (down_.load() || recv_queue_.closed()) {
        throw ChannelDownError(rail_, peer_, "channel is down");
      }
      throw Error("recv timeout on rail " + std::to_string(rail_) + " peer " +
                  std::to_string(peer_));
    }
    return *std::move(frame);
  }

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
    markDown(false);
  }

  bool isDown() const { return down_.load(); }

  void joinThreads() {
    std::lock_guard lock(lifecycle_mutex_);
    joinThreadsLocked();
  }

 private:
  void joinThreadsLocked() {
    send_queue_.close();
    recv_queue_.close();
    if (writer_.joinable()) {
      writer_.join();
    }
    if (reader_.joinable()) {
      reader_.join();
    }
  }

  void markDown(bool notify);

  void routeInbound(Frame frame);

  void writerLoop() {
    std::vector<std::uint8_t> wire;
    while (true) {
      auto item = send_queue_.pop();
      if (!item) {
        return;
      }
      if (shaping_ && pacer_ && item->frame.type != MsgType::Health) {
        pacer_->pace(shaping_->messageLatency(item->frame.payload.size()));
      }
      wire.clear();
      encodeFrame(item->frame, wire);
      int fd = fd_.load(std::memory_order_acquire);
      if (fd < 0 || !writeAll(fd, wire.data(), wire.size())) {
        auto error = std::make_exception_ptr(
            ChannelDownError(rail_, peer_, "send failed: peer closed"));
        item->state->fail(error);
        failPendingSends();
        markDown(true);
        return;
      }
      countSend(item->frame);
      item->state->complete();
    }
  }

  void failPendingSends() {
    while (auto item = send_queue_.tryPop()) {
      item->state->fail(
          std::make_exception_ptr(ChannelDownError(rail_, peer_, "channel is down")));
    }
    send_queue_.close();
  }

  void readerLoop() {
    std::vector<std::uint8_t> header(kFrameHeaderBytes);
    while (true) {
      int fd = fd_.load(std::memory_order_acquire);
      if (fd < 0 || !readAll(fd, header.data(), header.size())) {
        markDown(true);
        return;
      }
      if (std::memcmp(header.data(), kFrameMagic, 4) != 0) {
        // Poisoned connection; never trust the rest of the header.
        markDown(true);
        return;
      }
      std::uint64_t length = 0;
      for (int i = 7; i >= 0; i--) {
        length = (length << 8) | header[21 + i];
      }
      std::vector<std::uint8_t> whole(header);
      whole.resize(kFrameHeaderBytes + length);
      if (length > 0 && !readAll(fd, whole.data() + kFrameHeaderBytes, length)) {
        markDown(true);
        return;
      }
      std::size_t consumed = 0;
      Frame frame;
      try {
        auto decoded = decodeFrame(whole, consumed);
        if (!decoded) {
          markDown(true);
          return;
        }
        frame = *std::move(decoded);
      } catch (const ProtocolError&) {
        markDown(true);
        return;
      }
      routeInbound(std::move(frame));
    }
  }

  TcpConnectionSet& owner_;
  const RailProfile* shaping_;
  LinkPacer* pacer_;
  std::atomic<int> fd_{-1};
  std::atomic<bool> down_{true};
  std::atomic<bool> down_reported_{false};
  BlockingQueue<QueuedSend> send_queue_;
  BlockingQueue<Frame> recv_queue_;
  std::thread writer_;
  std::thread reader_;
  std::mutex lifecycle_mutex_;

  friend class TcpConnectionSet;
};

class TcpConnectionSet : public ConnectionSet {
 public:
  TcpConnectionSet(const TransportOptions& options)
      : ConnectionSet(options.rank, options.world_size, options.rails),
        shaped_(options.kind == TransportKind::Shaped),
        shared_link_(options.shared_link_across_rails) {
    store_ = std::make_unique<FileStore>(FileStore::resolveDir(options.rendezvous_dir));

    // The accept threads index this map, so it is fully built before any of
    // them start.
    for (const auto& rail : rails_) {
      for (int peer = rank_ + 1; peer < world_size_; peer++) {
        accepted_.try_emplace({rail.rail_id, peer});
      }
    }
    for (const auto& rail : rails_) {
      openListener(rail.rail_id);
    }
    std::vector<int> rail_ids;
    for (const auto& rail : rails_) {
      rail_ids.push_back(rail.rail_id);
      store_->publish({rank_, rail.rail_id, listen_addrs_.at(rail.rail_id)});
    }
    auto records = store_->waitForAll(world_size_, rail_ids, options.rendezvous_timeout);
    for (const auto& record : records) {
      peer_addrs_[{record.rail, record.rank}] = record.addr;
    }

    // Channel objects exist up front; sockets attach as they come up.
    for (const auto& rail : rails_) {
      const RailProfile* shaping = shaped_ ? &rail : nullptr;
      for (int peer = 0; peer < world_size_; peer++) {
        if (peer == rank_) {
          continue;
        }
        const int link = shared_link_ ? peer : rail.rail_id * 4096 + peer;
        LinkPacer* pacer = nullptr;
        if (shaped_) {
          pacer = &pacers_.try_emplace(link).first->second;
        }
        channels_[{rail.rail_id, peer}] =
            std::make_unique<TcpChannel>(*this, rail.rail_id, peer, link, shaping, pacer);
      }
    }

    for (const auto& rail : rails_) {
      connectRail(rail.rail_id, options.rendezvous_timeout);
    }
  }

  ~TcpConnectionSet() override {
    control_queue_.close();
    for (auto& [rail, queue] : handoff_queues_) {
      queue.close();
    }
    for (auto& [key, ch] : channels_) {
      ch->close();
    }
    for (auto& [rail, fd] : listen_fds_) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
    for (auto& [rail, thread] : accept_threads_) {
      if (thread.joinable()) {
        thread.join();
      }
    }
    for (auto& [key, ch] : channels_) {
      ch->joinThreads();
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

  void closeRail(int rail) override {
    for (auto& [key, ch] : channels_) {
      if (key.first == rail) {
        ch->close();
      }
    }
  }

  bool reopenRail(int rail) override {
    handoffQueue(rail).reopen();
    try {
      connectRail(rail, std::chrono::microseconds(10'000'000));
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  void deliverInbound(int rail, int peer, Frame frame) {
    switch (frame.type) {
      case MsgType::Health:
        routeHealth(rail, peer);
        return;
      case MsgType::Handoff:
        handoff_queues_.at(rail).push({rail, peer, std::move(frame)});
        return;
      case MsgType::Data:
        if ((frame.op_seq & kControlOpBit) != 0) {
          control_queue_.push({rail, peer, std::move(frame)});
          return;
        }
        break;
      case MsgType::Ack:
        break;
    }
    static_cast<TcpChannel&>(channel(rail, peer)).recv_queue_.push(std::move(frame));
  }

  void deliverDown(int rail, int peer) { routeChannelDown(rail, peer); }

 private:
  void openListener(int rail) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
      throw BindError("socket() failed");
    }
    int reuse = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof(reuse));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      throw BindError("bind() failed: " + std::string(strerror(errno)));
    }
    if (::listen(fd, 128) != 0) {
      ::close(fd);
      throw BindError("listen() failed");
    }
    socklen_t len = sizeof(addr);
    getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    listen_fds_[rail] = fd;
    listen_addrs_[rail] = "127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
    accept_threads_[rail] = std::thread([this, rail, fd] { acceptLoop(rail, fd); });
  }

  void acceptLoop(int rail, int listen_fd) {
    while (true) {
      int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) {
        return;  // listener closed
      }
      std::uint8_t hello[8];
      if (!readAll(fd, hello, sizeof(hello))) {
        ::close(fd);
        continue;
      }
      std::uint32_t peer = 0, hello_rail = 0;
      std::memcpy(&peer, hello, 4);
      std::memcpy(&hello_rail, hello + 4, 4);
      auto it = accepted_.find({rail, static_cast<int>(peer)});
      if (static_cast<int>(hello_rail) != rail || it == accepted_.end()) {
        ::close(fd);
        continue;
      }
      it->second.push(fd);
    }
  }

  int dial(int rail, int peer, std::chrono::microseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    const auto [host, port] = splitHostPort(peer_addrs_.at({rail, peer}));
    while (true) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) {
        throw BindError("socket() failed");
      }
      sockaddr_in addr{};
      addr.sin_family = AF_INET;
      addr.sin_port = htons(port);
      inet_pton(AF_INET, host.c_str(), &addr.sin_addr);
      if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
        std::uint8_t hello[8];
        std::uint32_t self = static_cast<std::uint32_t>(rank_);
        std::uint32_t r = static_cast<std::uint32_t>(rail);
        std::memcpy(hello, &self, 4);
        std::memcpy(hello + 4, &r, 4);
        if (writeAll(fd, hello, sizeof(hello))) {
          return fd;
        }
      }
      ::close(fd);
      if (std::chrono::steady_clock::now() > deadline) {
        throw RendezvousTimeoutError("cannot connect to rank " + std::to_string(peer) +
                                     " rail " + std::to_string(rail));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  // Lower ranks listen, higher ranks dial.
  void connectRail(int rail, std::chrono::microseconds timeout) {
    for (int peer = 0; peer < world_size_; peer++) {
      if (peer == rank_) {
        continue;
      }
      auto& ch = static_cast<TcpChannel&>(channel(rail, peer));
      if (!ch.isDown()) {
        continue;
      }
      if (peer < rank_) {
        ch.attach(dial(rail, peer, timeout));
      } else {
        auto fd = accepted_.at({rail, peer}).popFor(timeout);
        if (!fd) {
          throw RendezvousTimeoutError("no inbound connection from rank " +
                                       std::to_string(peer) + " rail " +
                                       std::to_string(rail));
        }
        ch.attach(*fd);
      }
    }
  }

  bool shaped_;
  bool shared_link_;
  std::unique_ptr<FileStore> store_;
  std::map<int, int> listen_fds_;
  std::map<int, std::string> listen_addrs_;
  std::map<int, std::thread> accept_threads_;
  std::map<std::pair<int, int>, std::string> peer_addrs_;
  std::map<std::pair<int, int>, BlockingQueue<int>> accepted_;
  std::map<std::pair<int, int>, std::unique_ptr<TcpChannel>> channels_;
  std::map<int, LinkPacer> pacers_;
};

void TcpChannel::markDown(bool notify) {
  bool expected = false;
  if (down_.compare_exchange_strong(expected, true)) {
    recv_queue_.close();
    failPendingSends();
  }
  if (notify && !down_reported_.exchange(true)) {
    owner_.deliverDown(rail_, peer_);
  }
}

void TcpChannel::routeInbound(Frame frame) {
  owner_.deliverInbound(rail_, peer_, std::move(frame));
}

}  // namespace

TransportKind transportKindFromString(const std::string& name) {
  if (name == "inmem") return TransportKind::InMemory;
  if (name == "tcp") return TransportKind::Tcp;
  if (name == "shaped") return TransportKind::Shaped;
  throw std::invalid_argument("unknown transport: " + name);
}

const char* toString(TransportKind kind) {
  switch (kind) {
    case TransportKind::InMemory:
      return "inmem";
    case TransportKind::Tcp:
      return "tcp";
    case TransportKind::Shaped:
      return "shaped";
  }
  return "unknown";
}

std::unique_ptr<ConnectionSet> rendezvous(const TransportOptions& options) {
  if (options.world_size < 2) {
    throw std::invalid_argument("rendezvous requires at least 2 ranks");
  }
  if (options.rank < 0 || options.rank >= options.world_size) {
    throw std::invalid_argument("rank out of range");
  }
  if (options.rails.empty()) {
    throw std::invalid_argument("at least one rail is required");
  }
  for (const auto& rail : options.rails) {
    rail.validate();
  }
  if (options.kind == TransportKind::InMemory) {
    if (!options.fabric) {
      throw std::invalid_argument("in-memory transport requires a fabric");
    }
    return options.fabric->connect(options.rank);
  }
  return std::make_unique<TcpConnectionSet>(options);
}

}  // namespace nezha
