#include "nezha/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nezha {

const char* toString(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Tcp:
      return "tcp";
    case ProtocolKind::Sharp:
      return "sharp";
    case ProtocolKind::Glex:
      return "glex";
    case ProtocolKind::Custom:
      return "custom";
  }
  return "unknown";
}

ProtocolKind protocolKindFromString(const std::string& name) {
  if (name == "tcp") return ProtocolKind::Tcp;
  if (name == "sharp") return ProtocolKind::Sharp;
  if (name == "glex") return ProtocolKind::Glex;
  if (name == "custom") return ProtocolKind::Custom;
  throw std::invalid_argument("unknown protocol kind: " + name);
}

void RailProfile::validate() const {
  if (t_setup_us < 0) {
    throw std::invalid_argument("rail " + std::to_string(rail_id) +
                                ": t_setup must be >= 0");
  }
  if (bandwidth_bps <= 0) {
    throw std::invalid_argument("rail " + std::to_string(rail_id) +
                                ": bandwidth must be > 0");
  }
  if (max_frame_payload == 0) {
    throw std::invalid_argument("rail " + std::to_string(rail_id) +
                                ": max_frame_payload must be > 0");
  }
  for (size_t i = 1; i < efficiency_points.size(); i++) {
    if (efficiency_points[i].first <= efficiency_points[i - 1].first ||
        efficiency_points[i].second <= efficiency_points[i - 1].second) {
      throw std::invalid_argument(
          "rail " + std::to_string(rail_id) +
          ": efficiency_points must be strictly increasing in size and latency");
    }
  }
}

Micros RailProfile::parametricLatency(Bytes size) const {
  return t_setup_us + static_cast<double>(size) / bandwidth_bps * 1e6;
}

Micros RailProfile::messageLatency(Bytes size) const {
  if (efficiency_points.empty()) {
    return parametricLatency(size);
  }
  const auto& pts = efficiency_points;
  if (pts.size() == 1 || size <= pts.front().first) {
    // Below the smallest sample the fixed overhead dominates; hold flat.
    return pts.front().second;
  }
  size_t hi = 1;
  while (hi + 1 < pts.size() && pts[hi].first < size) {
    hi++;
  }
  const auto& a = pts[hi - 1];
  const auto& b = pts[hi];
  const double t = (static_cast<double>(size) - static_cast<double>(a.first)) /
                   (static_cast<double>(b.first) - static_cast<double>(a.first));
  // Above the last sample this extrapolates along the final segment.
  return a.second + t * (b.second - a.second);
}

bool segmentsCoverExactly(std::vector<Segment> segments, Bytes total) {
  std::sort(segments.begin(), segments.end(),
            [](const Segment& a, const Segment& b) { return a.offset < b.offset; });
  Bytes cursor = 0;
  for (const auto& seg : segments) {
    if (seg.offset != cursor) {
      return false;
    }
    cursor += seg.length;
  }
  return cursor == total;
}

int bucketOf(Bytes size) {
  if (size == 0) {
    throw std::invalid_argument("bucketOf: size must be positive");
  }
  int bucket = 0;
  while (size >>= 1) {
    bucket++;
  }
  return bucket;
}

Bytes bucketFloor(int bucket) {
  if (bucket < 0 || bucket >= 64) {
    throw std::invalid_argument("bucketFloor: bucket out of range");
  }
  return Bytes{1} << bucket;
}

}  // namespace nezha
