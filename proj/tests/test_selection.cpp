#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "crsim/model.hpp"
#include "crsim/random.hpp"

using namespace crsim;

namespace {

ChannelPeriods with_availability(std::int32_t id, double a) {
  // availability a = off / (on + off) over a 10 s cycle
  const SimTime off = seconds_to_us(10.0 * a);
  const SimTime on = seconds_to_us(10.0 * (1.0 - a));
  return {id, on, off};
}

}  // namespace

TEST_CASE("availability ratio") {
  CHECK(availability(1e6, 1e6) == Catch::Approx(0.5));
  CHECK(availability(2.0, 8.0) == Catch::Approx(0.8));
  CHECK(availability(0.0, 123.0) == Catch::Approx(1.0));
  CHECK(availability(123.0, 0.0) == Catch::Approx(0.0));
  CHECK_THROWS_AS(availability(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(availability(-1.0, 2.0), std::invalid_argument);
}

TEST_CASE("primary channel selection is the availability argmax") {
  SECTION("argmax by inspection") {
    const std::vector<ChannelPeriods> channels = {
        with_availability(1, 0.3), with_availability(2, 0.7),
        with_availability(3, 0.5)};
    CHECK(sel_primary_channel(channels) == 2);
  }
  SECTION("single channel") {
    const std::vector<ChannelPeriods> channels = {with_availability(1, 0.2)};
    CHECK(sel_primary_channel(channels) == 1);
  }
  SECTION("ties break to the lowest id") {
    const std::vector<ChannelPeriods> channels = {with_availability(1, 0.6),
                                                  with_availability(2, 0.6)};
    CHECK(sel_primary_channel(channels) == 1);
  }
  SECTION("empty list") {
    CHECK_THROWS_AS(sel_primary_channel({}), std::invalid_argument);
  }
}

TEST_CASE("primary selection is invariant under common period scaling") {
  StochasticSource rng(555);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.pick_index(20));
    std::vector<ChannelPeriods> base;
    base.reserve(static_cast<std::size_t>(n));
    for (int ch = 1; ch <= n; ++ch) {
      base.push_back({ch, seconds_to_us(rng.uniform(0.5, 20.0)),
                      seconds_to_us(rng.uniform(0.5, 20.0))});
    }
    const double factor = rng.uniform(0.01, 100.0);
    std::vector<ChannelPeriods> scaled = base;
    for (auto& ch : scaled) {
      ch.on_mean_us = static_cast<SimTime>(
          std::llround(static_cast<double>(ch.on_mean_us) * factor));
      ch.off_mean_us = static_cast<SimTime>(
          std::llround(static_cast<double>(ch.off_mean_us) * factor));
    }
    // scaling in integer microseconds rounds, so compare through the exact
    // double-valued periods instead
    std::vector<ChannelPeriods> exact = base;
    for (auto& ch : exact) {
      ch.on_mean_us *= 16;
      ch.off_mean_us *= 16;
    }
    CHECK(sel_primary_channel(base) == sel_primary_channel(exact));
    REQUIRE(sel_primary_channel(base) == sel_primary_channel(scaled));
  }
}

TEST_CASE("switching time is |channel gap| * bandwidth * delay per MHz") {
  CHECK(switching_time(3, 1, 5.0, 100.0) == 1000);
  CHECK(switching_time(1, 3, 5.0, 100.0) == 1000);
  CHECK(switching_time(4, 4, 5.0, 100.0) == 0);
  CHECK(switching_time(2, 1, 5.0, 100.0) == 500);
  for (std::int32_t gap = 1; gap < 50; ++gap) {
    CHECK(switching_time(1, 1 + gap, 5.0, 100.0) == 500 * gap);
  }
}

TEST_CASE("backup channel selection") {
  const std::vector<ChannelPeriods> channels = {with_availability(1, 0.4),
                                                with_availability(2, 0.8),
                                                with_availability(3, 0.9)};
  SECTION("already defined: returns 0 and changes nothing") {
    NetworkState state;
    state.prim = 2;
    state.back = 3;
    state.sw_time = 500;
    CHECK(sel_backup_channel(channels, state, 5.0, 100.0) == 0);
    CHECK(state.back == 3);
    CHECK(state.sw_time == 500);
  }
  SECTION("argmax over non-primary channels, retune delay computed") {
    NetworkState state;
    state.prim = 2;
    CHECK(sel_backup_channel(channels, state, 5.0, 100.0) == 3);
    CHECK(state.back == 3);
    CHECK(state.sw_time == 500);  // |2-3| * 5 MHz * 100 us/MHz
  }
  SECTION("sole remaining candidate wins regardless of availability") {
    const std::vector<ChannelPeriods> two = {with_availability(1, 0.99),
                                             with_availability(2, 0.01)};
    NetworkState state;
    state.prim = 1;
    CHECK(sel_backup_channel(two, state, 5.0, 100.0) == 2);
    CHECK(state.sw_time == 500);
  }
  SECTION("no candidate besides the primary") {
    const std::vector<ChannelPeriods> one = {with_availability(1, 0.5)};
    NetworkState state;
    state.prim = 1;
    CHECK_THROWS_AS(sel_backup_channel(one, state, 5.0, 100.0),
                    std::invalid_argument);
  }
}
