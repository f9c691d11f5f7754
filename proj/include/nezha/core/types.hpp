#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nezha {

// Durations are carried as microseconds in double precision throughout.
using Micros = double;
using Bytes = std::uint64_t;

enum class ProtocolKind : std::uint8_t { Tcp = 0, Sharp = 1, Glex = 2, Custom = 3 };

const char* toString(ProtocolKind kind);
ProtocolKind protocolKindFromString(const std::string& name);

/// Per-rail performance model. Drives both traffic shaping and scheduling.
///
/// The two-parameter model (t_setup, bandwidth) predicts a single message of
/// S bytes to take t_setup + S/bandwidth. When calibration samples are
/// present they take precedence and per-size latency is linearly
/// interpolated between them (flat below the smallest sample, last-segment
/// slope above the largest).
struct RailProfile {
  int rail_id = 0;
  ProtocolKind protocol = ProtocolKind::Tcp;
  Micros t_setup_us = 0.0;
  double bandwidth_bps = 0.0;  // bytes per second
  std::vector<std::pair<Bytes, Micros>> efficiency_points;  // (size, latency)
  Bytes max_frame_payload = 64 * 1024;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  // Model latency of one S-byte message on this rail.
  Micros messageLatency(Bytes size) const;

  // Always the two-parameter form, ignoring efficiency_points.
  Micros parametricLatency(Bytes size) const;

  bool hasCalibration() const { return !efficiency_points.empty(); }
};

/// An (offset, length) slice of the shared reduction buffer assigned to one
/// rail. Offsets are byte indices; upstream allocation keeps boundaries on
/// 4-byte element boundaries.
struct Segment {
  Bytes offset = 0;
  Bytes length = 0;

  Bytes end() const { return offset + length; }
  bool operator==(const Segment&) const = default;
};

// True when the segments are pairwise disjoint and cover [0, total) exactly.
bool segmentsCoverExactly(std::vector<Segment> segments, Bytes total);

/// Gradient payload carrier: contiguous 32-bit floats.
struct Tensor {
  std::vector<float> values;

  Bytes byteLength() const { return values.size() * sizeof(float); }
  float* data() { return values.data(); }
  const float* data() const { return values.data(); }
};

enum class ReduceOp : std::uint8_t { Sum = 0 };

// Payload sizes in [2^k, 2^(k+1)) share a bucket; returns k.
int bucketOf(Bytes size);

// Smallest size that falls into the given bucket.
Bytes bucketFloor(int bucket);

}  // namespace nezha
