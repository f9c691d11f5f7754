#include "nezha/core/math.hpp"

#include <stdexcept>

namespace nezha {

Bytes ringVolume(int node_count, Bytes payload) {
  if (node_count < 2) {
    throw std::invalid_argument("ringVolume: node_count must be >= 2");
  }
  // 2*(N-1)*M/N in integer arithmetic, rounded to the nearest byte.
  const unsigned __int128 numerator =
      static_cast<unsigned __int128>(2) * static_cast<unsigned>(node_count - 1) * payload;
  const unsigned n = static_cast<unsigned>(node_count);
  return static_cast<Bytes>((numerator + n / 2) / n);
}

double networkEfficiency(const RailProfile& profile, Bytes payload) {
  if (payload == 0) {
    throw std::invalid_argument("networkEfficiency: payload must be positive");
  }
  const double transfer_us = static_cast<double>(payload) / profile.bandwidth_bps * 1e6;
  return 1.0 / (1.0 + profile.t_setup_us / transfer_us);
}

double realTimeThroughput(const RailProfile& profile, Bytes payload) {
  if (payload == 0) {
    return 0.0;
  }
  const Micros latency = profile.messageLatency(payload);
  if (latency <= 0) {
    return 0.0;
  }
  return static_cast<double>(payload) / (latency * 1e-6);
}

}  // namespace nezha
