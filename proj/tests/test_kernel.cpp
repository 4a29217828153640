#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <string>
#include <vector>

#include "crsim/kernel.hpp"
#include "support/reach_oracle.hpp"

using namespace crsim;

namespace {

using IntNet = Net<int>;
using IntSpec = TransitionSpec<int>;
using IntTokens = std::span<const TimedToken<int>>;

// Transition moving any token from one place to another, optionally with a
// timestamp delay.
IntSpec mover(std::string name, std::string from, std::size_t to,
              SimTime delay = 0, int priority = 0) {
  IntSpec t;
  t.name = std::move(name);
  t.priority = priority;
  t.inputs = {{std::move(from), nullptr}};
  t.effect = [to, delay](IntTokens consumed, SimTime clock,
                         Emitter<int>& em) {
    em.emit(to, consumed[0].value, clock + delay);
  };
  return t;
}

std::string trace_to_string(const RunResult& result) {
  std::string s;
  for (const TraceRecord& r : result.trace) {
    s += std::to_string(r.time);
    s += ' ';
    s += r.summary;
    s += '\n';
  }
  return s;
}

}  // namespace

TEST_CASE("net construction validates names and references") {
  SECTION("degenerate net: one place, no transitions") {
    const IntNet net = build_net<int>({"P"}, {});
    CHECK(net.place_count() == 1);
    CHECK(net.transition_count() == 0);
    CHECK(net.empty_marking().size() == 0);
  }
  SECTION("duplicate place name") {
    CHECK_THROWS_AS(build_net<int>({"P", "P"}, {}), BuildError);
  }
  SECTION("transition referencing an undeclared place") {
    CHECK_THROWS_AS(build_net<int>({"P"}, {mover("t", "X", 0)}), BuildError);
  }
  SECTION("duplicate transition name") {
    CHECK_THROWS_AS(
        build_net<int>({"P"}, {mover("t", "P", 0), mover("t", "P", 0)}),
        BuildError);
  }
}

TEST_CASE("tokens participate in enabling only once mature") {
  const IntNet net = build_net<int>({"P", "Q"}, {mover("t", "P", 1)});
  auto marking = net.empty_marking();
  marking.add(0, 1, 100);

  CHECK(enabled_bindings(net, marking, 50).empty());
  const auto at_maturity = enabled_bindings(net, marking, 100);
  REQUIRE(at_maturity.size() == 1);
  CHECK(at_maturity[0].tokens[0].value == 1);
}

TEST_CASE("two identical mature tokens yield one binding per token choice") {
  const IntNet net = build_net<int>({"P", "Q"}, {mover("t", "P", 1)});
  auto marking = net.empty_marking();
  marking.add(0, 7, 10);
  marking.add(0, 7, 10);
  const auto bindings = enabled_bindings(net, marking, 10);
  REQUIRE(bindings.size() == 2);
  CHECK(bindings[0].token_ids[0] != bindings[1].token_ids[0]);
}

TEST_CASE("firing transports tokens and conserves counts") {
  const IntNet net = build_net<int>({"A", "B"}, {mover("t", "A", 1)});
  auto marking = net.empty_marking();
  marking.add(0, 7, 0);

  const auto bindings = enabled_bindings(net, marking, 0);
  REQUIRE(bindings.size() == 1);
  fire(net, marking, bindings[0], 0);

  CHECK(marking.size(0) == 0);
  REQUIRE(marking.size(1) == 1);
  CHECK(marking.tokens(1)[0].token.value == 7);
  CHECK(marking.size() == 1);

  SECTION("refiring the consumed binding is a stale-binding error") {
    CHECK_THROWS_AS(fire(net, marking, bindings[0], 0), FiringError);
  }
}

TEST_CASE("effect delays make the produced token immature") {
  const IntNet net = build_net<int>({"A", "B"}, {mover("t", "A", 1, 500)});
  auto marking = net.empty_marking();
  marking.add(0, 3, 0);
  fire(net, marking, enabled_bindings(net, marking, 0)[0], 0);

  CHECK(marking.tokens(1)[0].token.timestamp == 500);
  const IntNet consumer = build_net<int>({"A", "B"}, {mover("t", "B", 0)});
  CHECK(enabled_bindings(consumer, marking, 499).empty());
  CHECK(enabled_bindings(consumer, marking, 500).size() == 1);
}

TEST_CASE("effects may not emit into the past") {
  IntSpec bad;
  bad.name = "bad";
  bad.inputs = {{"A", nullptr}};
  bad.effect = [](IntTokens, SimTime clock, Emitter<int>& em) {
    em.emit(0, 1, clock - 1);
  };
  const IntNet net = build_net<int>({"A"}, {bad});
  auto marking = net.empty_marking();
  marking.add(0, 1, 5);
  CHECK_THROWS_AS(fire(net, marking, enabled_bindings(net, marking, 5)[0], 5),
                  FiringError);
}

TEST_CASE("advance_clock jumps to the earliest enabling time") {
  SECTION("single future event") {
    const IntNet net = build_net<int>({"P", "Q"}, {mover("t", "P", 1)});
    auto marking = net.empty_marking();
    marking.add(0, 1, 5000);
    CHECK(advance_clock(net, marking, 0) == SimTime{5000});
  }
  SECTION("minimum over distinct transitions") {
    const IntNet net = build_net<int>(
        {"P", "Q", "R"}, {mover("t1", "P", 2), mover("t2", "Q", 2)});
    auto marking = net.empty_marking();
    marking.add(0, 1, 300);
    marking.add(1, 2, 200);
    CHECK(advance_clock(net, marking, 0) == SimTime{200});
  }
  SECTION("empty marking is dead") {
    const IntNet net = build_net<int>({"P"}, {mover("t", "P", 0)});
    const auto marking = net.empty_marking();
    CHECK(!advance_clock(net, marking, 0).has_value());
  }
  SECTION("tokens that enable nothing are dead too") {
    const IntNet net = build_net<int>({"P", "Q"}, {mover("t", "Q", 0)});
    auto marking = net.empty_marking();
    marking.add(0, 1, 100);
    CHECK(!advance_clock(net, marking, 0).has_value());
  }
}

TEST_CASE("self-regenerating tick net fires once per second") {
  // one token cycling through a 1 s delay; horizon 3.5 s -> t = 1, 2, 3 s
  const IntNet net =
      build_net<int>({"Tick"}, {mover("tick", "Tick", 0, 1'000'000)});
  auto marking = net.empty_marking();
  marking.add(0, 1, 1'000'000);

  const RunResult result = run(net, marking, 0, 3'500'000);
  REQUIRE(result.firings == 3);
  CHECK(result.trace[0].time == 1'000'000);
  CHECK(result.trace[1].time == 2'000'000);
  CHECK(result.trace[2].time == 3'000'000);
  CHECK(!result.dead);
}

TEST_CASE("dead initial marking terminates immediately") {
  const IntNet net = build_net<int>({"P"}, {mover("t", "P", 0)});
  auto marking = net.empty_marking();
  const RunResult result = run(net, marking, 0, 1'000'000);
  CHECK(result.dead);
  CHECK(result.trace.empty());
  CHECK(result.firings == 0);
}

TEST_CASE("runs are deterministic: identical traces for identical setups") {
  auto make = [] {
    return build_net<int>({"P", "Q"}, {mover("a", "P", 1, 100),
                                       mover("b", "Q", 0, 250)});
  };
  auto run_once = [&] {
    const IntNet net = make();
    auto marking = net.empty_marking();
    marking.add(0, 1, 0);
    marking.add(0, 2, 40);
    return trace_to_string(run(net, marking, 0, 10'000));
  };
  const std::string first = run_once();
  const std::string second = run_once();
  CHECK(first == second);
  CHECK(!first.empty());
}

TEST_CASE("clock never decreases along a trace") {
  const IntNet net = build_net<int>(
      {"P", "Q"}, {mover("a", "P", 1, 70), mover("b", "Q", 0, 130)});
  auto marking = net.empty_marking();
  marking.add(0, 1, 0);
  marking.add(0, 2, 35);
  const RunResult result = run(net, marking, 0, 50'000);
  SimTime last = 0;
  for (const TraceRecord& r : result.trace) {
    CHECK(r.time >= last);
    last = r.time;
  }
  CHECK(result.firings > 10);
}

TEST_CASE("conflicts resolve by priority rank then declaration order") {
  auto build = [](int pa, int pb) {
    return build_net<int>({"P", "A", "B"}, {mover("to_a", "P", 1, 0, pa),
                                            mover("to_b", "P", 2, 0, pb)});
  };
  SECTION("lower rank fires first") {
    const IntNet net = build(5, 1);
    auto marking = net.empty_marking();
    marking.add(0, 9, 0);
    const auto bindings = enabled_bindings(net, marking, 0);
    REQUIRE(bindings.size() == 2);
    CHECK(net.transition(bindings[0].transition).name == "to_b");
  }
  SECTION("equal ranks fall back to declaration order") {
    const IntNet net = build(1, 1);
    auto marking = net.empty_marking();
    marking.add(0, 9, 0);
    const auto bindings = enabled_bindings(net, marking, 0);
    REQUIRE(bindings.size() == 2);
    CHECK(net.transition(bindings[0].transition).name == "to_a");
  }
}

TEST_CASE("guards gate enabling and are rechecked at fire time") {
  bool open = false;
  IntSpec gated;
  gated.name = "gated";
  gated.inputs = {{"P", nullptr}};
  gated.guard = [&open](IntTokens, SimTime) { return open; };
  gated.effect = [](IntTokens consumed, SimTime clock, Emitter<int>& em) {
    em.emit(1, consumed[0].value, clock);
  };
  const IntNet net = build_net<int>({"P", "Q"}, {std::move(gated)});
  auto marking = net.empty_marking();
  marking.add(0, 1, 0);

  CHECK(enabled_bindings(net, marking, 0).empty());
  open = true;
  const auto bindings = enabled_bindings(net, marking, 0);
  REQUIRE(bindings.size() == 1);
  open = false;
  CHECK_THROWS_AS(fire(net, marking, bindings[0], 0), FiringError);
}

TEST_CASE("wake hints advance the clock for time-gated guards") {
  // mature token, but the guard opens at t = 500: without a hint the net
  // looks dead, with it the clock advances to exactly 500.
  SimTime opens_at = 500;
  auto make_spec = [&](bool with_hint) {
    IntSpec t;
    t.name = "gated";
    t.inputs = {{"P", nullptr}};
    t.guard = [&opens_at](IntTokens, SimTime clock) {
      return clock >= opens_at;
    };
    t.effect = [](IntTokens consumed, SimTime clock, Emitter<int>& em) {
      em.emit(1, consumed[0].value, clock);
    };
    if (with_hint) {
      t.wake_hint = [&opens_at](SimTime clock) -> std::optional<SimTime> {
        return opens_at > clock ? std::optional<SimTime>(opens_at)
                                : std::nullopt;
      };
    }
    return t;
  };

  {
    const IntNet net = build_net<int>({"P", "Q"}, {make_spec(true)});
    auto marking = net.empty_marking();
    marking.add(0, 1, 0);
    CHECK(advance_clock(net, marking, 0) == SimTime{500});
    const RunResult result = run(net, marking, 0, 10'000);
    REQUIRE(result.firings == 1);
    CHECK(result.trace[0].time == 500);
  }
  {
    const IntNet net = build_net<int>({"P", "Q"}, {make_spec(false)});
    auto marking = net.empty_marking();
    marking.add(0, 1, 0);
    CHECK(!advance_clock(net, marking, 0).has_value());
  }
}

TEST_CASE("maturity-exempt arcs may consume future tokens") {
  IntSpec sweep;
  sweep.name = "sweep";
  sweep.inputs = {{"P", nullptr, /*mature_only=*/false}};
  const IntNet net = build_net<int>({"P"}, {std::move(sweep)});
  auto marking = net.empty_marking();
  marking.add(0, 1, 1'000'000);

  const auto bindings = enabled_bindings(net, marking, 0);
  REQUIRE(bindings.size() == 1);
  fire(net, marking, bindings[0], 0);
  CHECK(marking.size() == 0);
}

TEST_CASE("seeded random tie-break is reproducible") {
  auto run_random = [](std::uint64_t seed) {
    const IntNet net = build_net<int>(
        {"P", "A", "B"}, {mover("to_a", "P", 1), mover("to_b", "P", 2)});
    auto marking = net.empty_marking();
    marking.add(0, 1, 0);
    marking.add(0, 2, 0);
    StochasticSource src(seed);
    RunOptions options;
    options.tie_break = TieBreak::kSeededRandom;
    options.tie_break_source = &src;
    return trace_to_string(run(net, marking, 0, 10, options));
  };
  CHECK(run_random(3) == run_random(3));
  CHECK_THROWS_AS(
      [] {
        const IntNet net = build_net<int>({"P"}, {mover("t", "P", 0)});
        auto marking = net.empty_marking();
        RunOptions options;
        options.tie_break = TieBreak::kSeededRandom;
        return run(net, marking, 0, 10, options);
      }(),
      std::invalid_argument);
}

TEST_CASE("engine reachability matches the brute-force oracle") {
  StochasticSource rng(20'260'809);
  for (int trial = 0; trial < 8; ++trial) {
    const reach::OracleNet net = reach::random_oracle_net(rng);
    CHECK(reach::engine_reachable(net) == reach::oracle_reachable(net));
  }
}
