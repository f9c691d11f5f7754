#pragma once

#include <algorithm>
#include <chrono>
#include <mutex>
#include <thread>

#include "nezha/core/types.hpp"

namespace nezha {

// Serializes departures on one physical link. Each message occupies the
// link for its model duration; concurrent channels on the same link queue
// behind each other, idle channels cost nothing.
class LinkPacer {
 public:
  // Blocks the calling writer until the message's model time has elapsed.
  void pace(Micros duration_us) {
    using clock = std::chrono::steady_clock;
    clock::time_point end;
    {
      std::lock_guard lock(mutex_);
      const auto now = clock::now();
      const auto start = std::max(now, next_free_);
      end = start + std::chrono::duration_cast<clock::duration>(
                        std::chrono::duration<double, std::micro>(duration_us));
      next_free_ = end;
    }
    std::this_thread::sleep_until(end);
  }

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_free_ = std::chrono::steady_clock::now();
};

}  // namespace nezha
