#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nezha/util/toml.hpp"

using nezha::toml::parse;

TEST_CASE("scalars, comments and tables") {
  auto root = parse(R"(
# rail definition
seed = 42
name = "dual tcp"
ratio = 0.75
flag = true
big = 1_000_000

[sim]
nodes = 4
penalty = false
)");
  CHECK(root.at("seed").asInt() == 42);
  CHECK(root.at("name").asString() == "dual tcp");
  CHECK(root.at("ratio").asDouble() == doctest::Approx(0.75));
  CHECK(root.at("flag").asBool());
  CHECK(root.at("big").asInt() == 1000000);
  CHECK(root.at("sim").at("nodes").asInt() == 4);
  CHECK_FALSE(root.at("sim").at("penalty").asBool());
  CHECK(root.intOr("missing", 7) == 7);
}

TEST_CASE("arrays of tables and nested arrays") {
  auto root = parse(R"(
[[rail]]
protocol = "tcp"
t_setup_us = 982.0
bandwidth_bps = 1.0e9
calibration = [[1024, 982.0], [8388608, 37137.0]]

[[rail]]
protocol = "sharp"
t_setup_us = 9.0
bandwidth_bps = 12.5e9
)");
  const auto& rails = root.at("rail").asArray();
  REQUIRE(rails.size() == 2);
  CHECK(rails[0].at("protocol").asString() == "tcp");
  CHECK(rails[0].at("bandwidth_bps").asDouble() == doctest::Approx(1.0e9));
  const auto& cal = rails[0].at("calibration").asArray();
  REQUIRE(cal.size() == 2);
  CHECK(cal[1].asArray()[0].asInt() == 8388608);
  CHECK(cal[1].asArray()[1].asDouble() == doctest::Approx(37137.0));
  CHECK(rails[1].at("protocol").asString() == "sharp");
}

TEST_CASE("errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse("key"), doctest::Contains("line 1"), std::runtime_error);
  CHECK_THROWS_AS(parse("x = \"unterminated"), std::runtime_error);
  CHECK_THROWS_AS(parse("a = 1\na = 2\n"), std::runtime_error);
  CHECK_THROWS_AS(parse("a = zzz\n"), std::runtime_error);
}

TEST_CASE("integer promotion and type guards") {
  auto root = parse("n = 3\nf = 1.5\n");
  CHECK(root.at("n").asDouble() == doctest::Approx(3.0));
  CHECK_THROWS_AS(root.at("f").asInt(), std::runtime_error);
  CHECK_THROWS_AS(root.at("n").asString(), std::runtime_error);
}
