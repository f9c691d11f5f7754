#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nezha {

enum class MsgType : std::uint8_t {
  Data = 1,
  Ack = 2,
  Health = 3,
  Handoff = 4,
};

// Wire unit. Layout, all integers little-endian:
//   magic    4 bytes  "NZHA"
//   msg_type 1 byte
//   op_seq   u32
//   chunk_index u32
//   offset   u64
//   length   u64   (payload byte count)
//   payload  length bytes
struct Frame {
  MsgType type = MsgType::Data;
  std::uint32_t op_seq = 0;
  std::uint32_t chunk_index = 0;
  std::uint64_t offset = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 29;
inline constexpr std::uint8_t kFrameMagic[4] = {'N', 'Z', 'H', 'A'};

// op_seq values with the top bit set form a control namespace carried over
// the same channels as collective traffic (allocation-table epochs).
inline constexpr std::uint32_t kControlOpBit = 0x80000000u;

void encodeFrame(const Frame& frame, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encodeFrame(const Frame& frame);

// Consumes one frame from the front of `bytes` if a complete one is present.
// Returns nullopt when more bytes are needed; sets `consumed` either way.
// Throws ProtocolError on a bad magic or unknown message type.
std::optional<Frame> decodeFrame(std::span<const std::uint8_t> bytes, std::size_t& consumed);

}  // namespace nezha
