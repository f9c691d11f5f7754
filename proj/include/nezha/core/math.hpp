#pragma once

#include "nezha/core/types.hpp"

namespace nezha {

// Bytes a single rank moves over the wire in a ring allreduce of `payload`
// bytes across `node_count` ranks: 2*(N-1)*M/N, rounded to the nearest byte.
Bytes ringVolume(int node_count, Bytes payload);

// Fraction of time an S-byte transfer spends moving payload rather than
// paying fixed per-message overhead: 1 / (1 + t_setup / (S / B)). In (0, 1].
double networkEfficiency(const RailProfile& profile, Bytes payload);

// Model throughput of the rail when carrying `payload` bytes in one message:
// payload divided by the model latency, in bytes per second.
double realTimeThroughput(const RailProfile& profile, Bytes payload);

}  // namespace nezha
