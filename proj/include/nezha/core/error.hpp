#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nezha {

// Base class for everything the library can throw on its own behalf.
// std::invalid_argument is used directly for precondition violations.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A malformed or unexpected frame arrived; the connection is poisoned.
struct ProtocolError : Error {
  using Error::Error;
};

// The peer side of a channel went away. Surfaced to the fault handling
// layer, never allowed to escape as a crash.
struct ChannelDownError : Error {
  ChannelDownError(int rail, int peer, const std::string& what)
      : Error(what), rail(rail), peer(peer) {}
  int rail;
  int peer;
};

struct RendezvousTimeoutError : Error {
  using Error::Error;
};

struct BindError : Error {
  using Error::Error;
};

// A collective was torn down mid-flight by a rail failure. Carries what is
// needed to hand the orphaned work to a surviving rail.
struct OperationAbortedError : Error {
  OperationAbortedError(std::uint32_t op_seq, std::uint64_t offset,
                        std::uint64_t length, int rail)
      : Error("operation aborted by rail failure"),
        op_seq(op_seq),
        offset(offset),
        length(length),
        rail(rail) {}
  std::uint32_t op_seq;
  std::uint64_t offset;
  std::uint64_t length;
  int rail;
};

struct DegenerateProfileError : Error {
  using Error::Error;
};

// No surviving rail is left to take over.
struct UnrecoverableError : Error {
  using Error::Error;
};

}  // namespace nezha
