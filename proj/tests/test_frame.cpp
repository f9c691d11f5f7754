#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nezha/core/error.hpp"
#include "nezha/transport/frame.hpp"

using namespace nezha;

namespace {

Frame randomFrame(std::mt19937& rng) {
  Frame f;
  f.type = static_cast<MsgType>(1 + rng() % 4);
  f.op_seq = rng();
  f.chunk_index = rng();
  f.offset = (static_cast<std::uint64_t>(rng()) << 32) | rng();
  f.payload.resize(rng() % 512);
  for (auto& b : f.payload) {
    b = static_cast<std::uint8_t>(rng());
  }
  return f;
}

}  // namespace

TEST_CASE("header layout is 29 bytes little-endian") {
  Frame f;
  f.type = MsgType::Data;
  f.op_seq = 0x01020304;
  f.chunk_index = 0x0a0b0c0d;
  f.offset = 0x1122334455667788ull;
  f.payload = {0xde, 0xad};

  auto wire = encodeFrame(f);
  REQUIRE(wire.size() == kFrameHeaderBytes + 2);
  CHECK(wire[0] == 'N');
  CHECK(wire[1] == 'Z');
  CHECK(wire[2] == 'H');
  CHECK(wire[3] == 'A');
  CHECK(wire[4] == 1);
  // op_seq little-endian
  CHECK(wire[5] == 0x04);
  CHECK(wire[8] == 0x01);
  // chunk_index
  CHECK(wire[9] == 0x0d);
  CHECK(wire[12] == 0x0a);
  // offset
  CHECK(wire[13] == 0x88);
  CHECK(wire[20] == 0x11);
  // length
  CHECK(wire[21] == 0x02);
  CHECK(wire[28] == 0x00);
  CHECK(wire[29] == 0xde);
}

TEST_CASE("decode round-trips arbitrary frames") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 500; trial++) {
    Frame f = randomFrame(rng);
    auto wire = encodeFrame(f);
    std::size_t consumed = 0;
    auto decoded = decodeFrame(wire, consumed);
    REQUIRE(decoded.has_value());
    CHECK(consumed == wire.size());
    CHECK(*decoded == f);
  }
}

TEST_CASE("partial input asks for more bytes") {
  Frame f;
  f.payload.assign(100, 0x55);
  auto wire = encodeFrame(f);
  std::size_t consumed = 0;
  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, kFrameHeaderBytes,
                          kFrameHeaderBytes + 50}) {
    auto partial = std::span(wire.data(), cut);
    CHECK_FALSE(decodeFrame(partial, consumed).has_value());
  }
}

TEST_CASE("two frames back to back decode in sequence") {
  Frame a;
  a.op_seq = 1;
  a.payload = {1, 2, 3};
  Frame b;
  b.op_seq = 2;
  b.type = MsgType::Ack;
  std::vector<std::uint8_t> wire;
  encodeFrame(a, wire);
  encodeFrame(b, wire);

  std::size_t consumed = 0;
  auto first = decodeFrame(wire, consumed);
  REQUIRE(first.has_value());
  CHECK(*first == a);
  auto rest = std::span(wire).subspan(consumed);
  auto second = decodeFrame(rest, consumed);
  REQUIRE(second.has_value());
  CHECK(*second == b);
}

TEST_CASE("wrong magic poisons the stream") {
  Frame f;
  auto wire = encodeFrame(f);
  wire[0] = 'X';
  std::size_t consumed = 0;
  CHECK_THROWS_AS(decodeFrame(wire, consumed), ProtocolError);
}

TEST_CASE("unknown message type rejected") {
  Frame f;
  auto wire = encodeFrame(f);
  wire[4] = 9;
  std::size_t consumed = 0;
  CHECK_THROWS_AS(decodeFrame(wire, consumed), ProtocolError);
}
