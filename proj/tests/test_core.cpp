#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nezha/core/math.hpp"
#include "nezha/core/types.hpp"

using namespace nezha;

TEST_CASE("ringVolume matches the closed form") {
  CHECK(ringVolume(2, 1024) == 1024);
  // 2 * 3 * (4 MiB) / 4 = 6 MiB
  CHECK(ringVolume(4, 4 * (Bytes{1} << 20)) == 6 * (Bytes{1} << 20));
  CHECK(ringVolume(16, 0) == 0);
  CHECK_THROWS_AS(ringVolume(1, 1024), std::invalid_argument);
  CHECK_THROWS_AS(ringVolume(0, 0), std::invalid_argument);
}

TEST_CASE("ringVolume is monotone and approaches 2M") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; trial++) {
    const int n = 2 + static_cast<int>(rng() % 62);
    const Bytes m = rng() % (Bytes{1} << 30);
    CHECK(ringVolume(n + 1, m) >= ringVolume(n, m));
    CHECK(ringVolume(n, m + 4096) >= ringVolume(n, m));
  }
  const Bytes m = Bytes{1} << 26;
  const double ratio = static_cast<double>(ringVolume(4096, m)) / static_cast<double>(m);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.001));
}

TEST_CASE("networkEfficiency follows the overhead model") {
  RailProfile zero_setup{.rail_id = 0, .t_setup_us = 0.0, .bandwidth_bps = 1e9};
  CHECK(networkEfficiency(zero_setup, 1) == doctest::Approx(1.0));
  CHECK(networkEfficiency(zero_setup, Bytes{1} << 30) == doctest::Approx(1.0));

  // Overhead equal to transfer time halves efficiency.
  RailProfile symmetric{.rail_id = 0, .t_setup_us = 100.0, .bandwidth_bps = 1e9};
  const Bytes payload_100us = 100000;  // 1e5 B / 1e9 Bps = 100 us
  CHECK(networkEfficiency(symmetric, payload_100us) == doctest::Approx(0.5));

  RailProfile slow_start{.rail_id = 0, .t_setup_us = 1000.0, .bandwidth_bps = 12.5e9};
  CHECK(networkEfficiency(slow_start, 125000) == doctest::Approx(1.0 / 101.0));

  CHECK_THROWS_AS(networkEfficiency(symmetric, 0), std::invalid_argument);
}

TEST_CASE("networkEfficiency is monotone in payload and setup") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; trial++) {
    RailProfile p{.rail_id = 0,
                  .t_setup_us = 1.0 + static_cast<double>(rng() % 10000),
                  .bandwidth_bps = 1e6 + static_cast<double>(rng() % 1000000000)};
    const Bytes s = 1 + rng() % (Bytes{1} << 26);
    CHECK(networkEfficiency(p, s * 2) > networkEfficiency(p, s));
    RailProfile slower = p;
    slower.t_setup_us *= 2;
    CHECK(networkEfficiency(slower, s) < networkEfficiency(p, s));
    CHECK(networkEfficiency(p, s) > 0.0);
    CHECK(networkEfficiency(p, s) <= 1.0);
  }
}

TEST_CASE("RailProfile validation") {
  RailProfile ok{.rail_id = 1, .t_setup_us = 10, .bandwidth_bps = 1e9};
  CHECK_NOTHROW(ok.validate());

  RailProfile negative_setup = ok;
  negative_setup.t_setup_us = -1;
  CHECK_THROWS_AS(negative_setup.validate(), std::invalid_argument);

  RailProfile no_bandwidth = ok;
  no_bandwidth.bandwidth_bps = 0;
  CHECK_THROWS_AS(no_bandwidth.validate(), std::invalid_argument);

  RailProfile bad_points = ok;
  bad_points.efficiency_points = {{1024, 10.0}, {1024, 20.0}};
  CHECK_THROWS_AS(bad_points.validate(), std::invalid_argument);

  RailProfile good_points = ok;
  good_points.efficiency_points = {{1024, 10.0}, {4096, 20.0}};
  CHECK_NOTHROW(good_points.validate());
}

TEST_CASE("messageLatency interpolates calibration samples") {
  RailProfile p{.rail_id = 0, .t_setup_us = 5.0, .bandwidth_bps = 1e9};
  p.efficiency_points = {{1024, 100.0}, {2048, 200.0}, {4096, 400.0}};
  CHECK(p.messageLatency(1024) == doctest::Approx(100.0));
  CHECK(p.messageLatency(1536) == doctest::Approx(150.0));
  CHECK(p.messageLatency(4096) == doctest::Approx(400.0));
  // Flat below the smallest sample, linear continuation above the largest.
  CHECK(p.messageLatency(10) == doctest::Approx(100.0));
  CHECK(p.messageLatency(8192) == doctest::Approx(800.0));
  // Without samples the parametric form applies.
  RailProfile q{.rail_id = 0, .t_setup_us = 5.0, .bandwidth_bps = 1e9};
  CHECK(q.messageLatency(1000) == doctest::Approx(6.0));
}

TEST_CASE("segment cover checking") {
  CHECK(segmentsCoverExactly({{0, 4}, {4, 12}}, 16));
  CHECK(segmentsCoverExactly({{4, 12}, {0, 4}}, 16));
  CHECK(segmentsCoverExactly({{0, 16}}, 16));
  CHECK_FALSE(segmentsCoverExactly({{0, 4}, {8, 8}}, 16));   // gap
  CHECK_FALSE(segmentsCoverExactly({{0, 8}, {4, 12}}, 16));  // overlap
  CHECK_FALSE(segmentsCoverExactly({{0, 8}}, 16));           // short
  CHECK(segmentsCoverExactly({}, 0));
}

TEST_CASE("size buckets are powers of two") {
  CHECK(bucketOf(1) == 0);
  CHECK(bucketOf(2) == 1);
  CHECK(bucketOf(3) == 1);
  CHECK(bucketOf(4096) == 12);
  CHECK(bucketOf(4097) == 12);
  CHECK(bucketOf(8191) == 12);
  CHECK(bucketOf(8192) == 13);
  CHECK(bucketFloor(12) == 4096);
  CHECK_THROWS_AS(bucketOf(0), std::invalid_argument);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; trial++) {
    const Bytes s = 1 + rng() % (Bytes{1} << 40);
    const int b = bucketOf(s);
    CHECK(bucketFloor(b) <= s);
    CHECK(s < bucketFloor(b + 1));
  }
}
