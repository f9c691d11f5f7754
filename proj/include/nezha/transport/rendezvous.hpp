#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace nezha {

// One record per (rank, rail): where that rank listens for that rail.
// Serialized as JSON {"rank":int,"rail":int,"addr":"host:port"}.
struct RendezvousRecord {
  int rank = 0;
  int rail = 0;
  std::string addr;
};

// Shared-directory rendezvous store. Any key-value surface with
// publish/wait semantics would do; a filesystem directory is the default.
class FileStore {
 public:
  explicit FileStore(std::string dir);

  // Resolution order: explicit argument, NEZHA_RENDEZVOUS_DIR, a
  // process-local default under /tmp.
  static std::string resolveDir(const std::string& explicit_dir);

  void publish(const RendezvousRecord& record);

  // Blocks until every (rank, rail) pair has published.
  std::vector<RendezvousRecord> waitForAll(int world_size, const std::vector<int>& rails,
                                           std::chrono::microseconds timeout);

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

}  // namespace nezha
