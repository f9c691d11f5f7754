#include "nezha/transport/frame.hpp"

#include <cstring>

#include "nezha/core/error.hpp"

namespace nezha {

namespace {

void putU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; i++) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void putU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; i++) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

std::uint32_t getU32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; i--) {
    v = (v << 8) | p[i];
  }
  return v;
}

std::uint64_t getU64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; i--) {
    v = (v << 8) | p[i];
  }
  return v;
}

}  // namespace

void encodeFrame(const Frame& frame, std::vector<std::uint8_t>& out) {
  out.reserve(out.size() + kFrameHeaderBytes + frame.payload.size());
  out.insert(out.end(), std::begin(kFrameMagic), std::end(kFrameMagic));
  out.push_back(static_cast<std::uint8_t>(frame.type));
  putU32(out, frame.op_seq);
  putU32(out, frame.chunk_index);
  putU64(out, frame.offset);
  putU64(out, frame.payload.size());
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
}

std::vector<std::uint8_t> encodeFrame(const Frame& frame) {
  std::vector<std::uint8_t> out;
  encodeFrame(frame, out);
  return out;
}

std::optional<Frame> decodeFrame(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
  consumed = 0;
  if (bytes.size() < kFrameHeaderBytes) {
    return std::nullopt;
  }
  if (std::memcmp(bytes.data(), kFrameMagic, 4) != 0) {
    throw ProtocolError("bad frame magic");
  }
  const std::uint8_t raw_type = bytes[4];
  if (raw_type < 1 || raw_type > 4) {
    throw ProtocolError("unknown message type " + std::to_string(raw_type));
  }
  const std::uint64_t length = getU64(bytes.data() + 21);
  if (bytes.size() < kFrameHeaderBytes + length) {
    return std::nullopt;
  }
  Frame frame;
  frame.type = static_cast<MsgType>(raw_type);
  frame.op_seq = getU32(bytes.data() + 5);
  frame.chunk_index = getU32(bytes.data() + 9);
  frame.offset = getU64(bytes.data() + 13);
  frame.payload.assign(bytes.begin() + kFrameHeaderBytes,
                       bytes.begin() + kFrameHeaderBytes + length);
  consumed = kFrameHeaderBytes + length;
  return frame;
}

}  // namespace nezha
