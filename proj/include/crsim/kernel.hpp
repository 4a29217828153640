#pragma once

// Timed colored Petri net execution kernel.
//
// Tokens carry a model-defined color plus a timestamp in microseconds. A
// token is mature once its timestamp is <= the global clock; input arcs bind
// mature tokens only, unless the arc opts out (mature_only = false). Firing
// is instantaneous: all delay lives in the timestamps of produced tokens.
// When nothing is enabled the clock jumps to the earliest time at which some
// transition becomes enabled, derived from token timestamps and transition
// wake hints.
//
// Conflict resolution is deterministic: bindings are ordered by
// (priority rank, transition declaration order, token enumeration order),
// so a run is a pure function of (net, initial marking, seed). A
// seeded-random tie-break mode exists for sensitivity checks.
//
// A single run is strictly sequential; independent Net/Marking instances may
// be driven concurrently (no shared mutable state in the kernel).

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crsim/random.hpp"
#include "crsim/time.hpp"

namespace crsim {

struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FiringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using TokenId = std::uint64_t;

template <typename Color>
struct TimedToken {
  Color value;
  SimTime timestamp = 0;
};

// One input arc: the place to consume from and which tokens qualify.
// An arc with mature_only = false may bind (and consume) tokens whose
// timestamp is still in the future; the 802.22 model uses this to clear
// preempted transmissions the instant a licensed user seizes the channel.
template <typename Color>
struct ArcSpec {
  std::string place;
  std::function<bool(const Color&)> filter;  // empty: any token qualifies
  bool mature_only = true;
};

template <typename Color>
class Emitter;

// Transition: input arcs, a guard over the candidate binding, and an effect
// producing output tokens. Lower priority rank fires first. wake_hint lets a
// transition whose guard depends on external timed state (not just token
// maturity) report the next instant at which it could become enabled.
template <typename Color>
struct TransitionSpec {
  std::string name;
  int priority = 0;
  std::vector<ArcSpec<Color>> inputs;
  std::function<bool(std::span<const TimedToken<Color>>, SimTime)> guard;
  std::function<void(std::span<const TimedToken<Color>>, SimTime,
                     Emitter<Color>&)>
      effect;
  std::function<std::optional<SimTime>(SimTime)> wake_hint;
};

// Multiset of timestamped tokens per place. Duplicate (value, timestamp)
// pairs are distinct entries; every entry has a unique id assigned in
// insertion order, which is what makes binding enumeration canonical.
template <typename Color>
class Marking {
 public:
  struct Entry {
    TokenId id;
    TimedToken<Color> token;
  };

  explicit Marking(std::size_t place_count) : places_(place_count) {}

  TokenId add(std::size_t place, Color value, SimTime timestamp) {
    if (timestamp < 0) {
      throw FiringError("token timestamp must be non-negative");
    }
    const TokenId id = next_id_++;
    places_.at(place).push_back(Entry{id, {std::move(value), timestamp}});
    return id;
  }

  bool remove(std::size_t place, TokenId id) {
    auto& entries = places_.at(place);
    for (auto it = entries.begin(); it != entries.end(); ++it) {
      if (it->id == id) {
        entries.erase(it);
        return true;
      }
    }
    return false;
  }

  const Entry* find(std::size_t place, TokenId id) const {
    for (const Entry& e : places_.at(place)) {
      if (e.id == id) {
        return &e;
      }
    }
    return nullptr;
  }

  std::span<const Entry> tokens(std::size_t place) const {
    const auto& entries = places_.at(place);
    return {entries.data(), entries.size()};
  }

  std::size_t place_count() const { return places_.size(); }

  std::size_t size(std::size_t place) const { return places_.at(place).size(); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& entries : places_) {
      n += entries.size();
    }
    return n;
  }

 private:
  std::vector<std::vector<Entry>> places_;
  TokenId next_id_ = 1;
};

// Collects the tokens an effect produces before they are applied to the
// marking. Emission timestamps may not precede the firing clock.
template <typename Color>
class Emitter {
 public:
  Emitter(std::size_t place_count, SimTime clock)
      : place_count_(place_count), clock_(clock) {}

  void emit(std::size_t place, Color value, SimTime timestamp) {
    if (place >= place_count_) {
      throw FiringError("effect emitted to unknown place index");
    }
    if (timestamp < clock_) {
      throw FiringError("effect emitted a token timestamped before the clock");
    }
    produced_.push_back({place, {std::move(value), timestamp}});
  }

  std::span<const std::pair<std::size_t, TimedToken<Color>>> produced() const {
    return {produced_.data(), produced_.size()};
  }

 private:
  std::size_t place_count_;
  SimTime clock_;
  std::vector<std::pair<std::size_t, TimedToken<Color>>> produced_;
};

namespace detail {
template <typename Color>
struct ResolvedTransition {
  TransitionSpec<Color> spec;
  std::vector<std::size_t> arc_places;
};
}  // namespace detail

// Immutable net structure: named places plus transitions with resolved arc
// place indices, ordered for deterministic conflict resolution.
template <typename Color>
class Net {
 public:
  static constexpr std::size_t kMaxInputArcs = 8;

  Net(std::vector<std::string> places,
      std::vector<TransitionSpec<Color>> transitions) {
    place_names_ = std::move(places);
    for (std::size_t i = 0; i < place_names_.size(); ++i) {
      if (!place_index_.emplace(place_names_[i], i).second) {
        throw BuildError("duplicate place name: " + place_names_[i]);
      }
    }
    std::unordered_map<std::string_view, std::size_t> transition_names;
    transitions_.reserve(transitions.size());
    for (auto& spec : transitions) {
      if (spec.inputs.size() > kMaxInputArcs) {
        throw BuildError("transition " + spec.name + " exceeds " +
                         std::to_string(kMaxInputArcs) + " input arcs");
      }
      detail::ResolvedTransition<Color> resolved;
      resolved.arc_places.reserve(spec.inputs.size());
      for (const auto& arc : spec.inputs) {
        auto it = place_index_.find(arc.place);
        if (it == place_index_.end()) {
          throw BuildError("transition " + spec.name +
                           " references undeclared place: " + arc.place);
        }
        resolved.arc_places.push_back(it->second);
      }
      resolved.spec = std::move(spec);
      if (!transition_names
               .emplace(resolved.spec.name, transitions_.size())
               .second) {
        throw BuildError("duplicate transition name: " + resolved.spec.name);
      }
      transitions_.push_back(std::move(resolved));
    }
    firing_order_.resize(transitions_.size());
    for (std::size_t i = 0; i < firing_order_.size(); ++i) {
      firing_order_[i] = i;
    }
    std::stable_sort(firing_order_.begin(), firing_order_.end(),
                     [this](std::size_t a, std::size_t b) {
                       return transitions_[a].spec.priority <
                              transitions_[b].spec.priority;
                     });
  }

  std::size_t place_count() const { return place_names_.size(); }

  std::size_t place_index(std::string_view name) const {
    auto it = place_index_.find(std::string(name));
    if (it == place_index_.end()) {
      throw BuildError("unknown place: " + std::string(name));
    }
    return it->second;
  }

  const std::string& place_name(std::size_t i) const {
    return place_names_.at(i);
  }

  std::size_t transition_count() const { return transitions_.size(); }

  const TransitionSpec<Color>& transition(std::size_t i) const {
    return transitions_.at(i).spec;
  }

  std::span<const std::size_t> arc_places(std::size_t transition) const {
    const auto& v = transitions_.at(transition).arc_places;
    return {v.data(), v.size()};
  }

  // Transition indices sorted by (priority, declaration order).
  std::span<const std::size_t> firing_order() const {
    return {firing_order_.data(), firing_order_.size()};
  }

  Marking<Color> empty_marking() const {
    return Marking<Color>(place_count());
  }

  // Optional stringifier used for trace binding summaries.
  void set_color_printer(std::function<std::string(const Color&)> printer) {
    color_printer_ = std::move(printer);
  }

  const std::function<std::string(const Color&)>& color_printer() const {
    return color_printer_;
  }

 private:
  std::vector<std::string> place_names_;
  std::unordered_map<std::string, std::size_t> place_index_;
  std::vector<detail::ResolvedTransition<Color>> transitions_;
  std::vector<std::size_t> firing_order_;
  std::function<std::string(const Color&)> color_printer_;
};

template <typename Color>
Net<Color> build_net(std::vector<std::string> places,
                     std::vector<TransitionSpec<Color>> transitions) {
  return Net<Color>(std::move(places), std::move(transitions));
}

// A concrete choice of input tokens for one transition, in arc order.
template <typename Color>
struct Binding {
  std::size_t transition = 0;
  std::vector<TokenId> token_ids;
  std::vector<TimedToken<Color>> tokens;
};

namespace detail {

// Enumerates bindings of one transition in canonical order (lexicographic
// over token entry positions per arc). visit returns true to stop early.
// Returns true if enumeration was stopped.
template <typename Color, typename Visit>
bool visit_bindings(const Net<Color>& net, const Marking<Color>& marking,
                    SimTime clock, std::size_t transition, Visit&& visit) {
  const TransitionSpec<Color>& spec = net.transition(transition);
  const auto arc_places = net.arc_places(transition);
  const std::size_t arcs = spec.inputs.size();
  if (arcs == 0) {
    return false;  // a transition without inputs never fires
  }
  std::array<const typename Marking<Color>::Entry*, Net<Color>::kMaxInputArcs>
      chosen{};
  std::array<std::size_t, Net<Color>::kMaxInputArcs> cursor{};
  std::array<std::span<const typename Marking<Color>::Entry>,
             Net<Color>::kMaxInputArcs>
      pool{};
  for (std::size_t a = 0; a < arcs; ++a) {
    pool[a] = marking.tokens(arc_places[a]);
  }
  std::array<TimedToken<Color>, Net<Color>::kMaxInputArcs> snapshot{};

  std::size_t depth = 0;
  cursor[0] = 0;
  while (true) {
    if (cursor[depth] >= pool[depth].size()) {
      if (depth == 0) {
        return false;
      }
      --depth;
      ++cursor[depth];
      continue;
    }
    const auto& entry = pool[depth][cursor[depth]];
    const ArcSpec<Color>& arc = spec.inputs[depth];
    bool ok = (!arc.mature_only || entry.token.timestamp <= clock) &&
              (!arc.filter || arc.filter(entry.token.value));
    if (ok) {
      // the same token entry may not back two arcs
      for (std::size_t a = 0; a < depth; ++a) {
        if (chosen[a]->id == entry.id) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      ++cursor[depth];
      continue;
    }
    chosen[depth] = &entry;
    if (depth + 1 < arcs) {
      ++depth;
      cursor[depth] = 0;
      continue;
    }
    for (std::size_t a = 0; a < arcs; ++a) {
      snapshot[a] = chosen[a]->token;
    }
    const std::span<const TimedToken<Color>> bound(snapshot.data(), arcs);
    if (!spec.guard || spec.guard(bound, clock)) {
      if (visit(std::span<const typename Marking<Color>::Entry* const>(
              chosen.data(), arcs))) {
        return true;
      }
    }
    ++cursor[depth];
  }
}

}  // namespace detail

// All enabled (transition, binding) pairs at the given clock, ordered by
// (priority, declaration order, canonical binding order).
template <typename Color>
std::vector<Binding<Color>> enabled_bindings(const Net<Color>& net,
                                             const Marking<Color>& marking,
                                             SimTime clock) {
  std::vector<Binding<Color>> out;
  for (std::size_t t : net.firing_order()) {
    detail::visit_bindings(
        net, marking, clock, t,
        [&](std::span<const typename Marking<Color>::Entry* const> entries) {
          Binding<Color> b;
          b.transition = t;
          b.token_ids.reserve(entries.size());
          b.tokens.reserve(entries.size());
          for (const auto* e : entries) {
            b.token_ids.push_back(e->id);
            b.tokens.push_back(e->token);
          }
          out.push_back(std::move(b));
          return false;
        });
  }
  return out;
}

// First enabled binding in canonical order, if any.
template <typename Color>
std::optional<Binding<Color>> first_enabled_binding(
    const Net<Color>& net, const Marking<Color>& marking, SimTime clock) {
  std::optional<Binding<Color>> out;
  for (std::size_t t : net.firing_order()) {
    const bool stopped = detail::visit_bindings(
        net, marking, clock, t,
        [&](std::span<const typename Marking<Color>::Entry* const> entries) {
          Binding<Color> b;
          b.transition = t;
          for (const auto* e : entries) {
            b.token_ids.push_back(e->id);
            b.tokens.push_back(e->token);
          }
          out = std::move(b);
          return true;
        });
    if (stopped) {
      break;
    }
  }
  return out;
}

template <typename Color>
bool any_enabled(const Net<Color>& net, const Marking<Color>& marking,
                 SimTime clock) {
  for (std::size_t t : net.firing_order()) {
    if (detail::visit_bindings(
            net, marking, clock, t,
            [](std::span<const typename Marking<Color>::Entry* const>) {
              return true;
            })) {
      return true;
    }
  }
  return false;
}

// Fires one binding: consumes exactly the bound tokens, runs the effect, and
// adds the produced tokens. The clock does not move. Throws FiringError if
// the binding went stale (a bound token is gone) or is no longer enabled.
template <typename Color>
void fire(const Net<Color>& net, Marking<Color>& marking,
          const Binding<Color>& binding, SimTime clock) {
  const TransitionSpec<Color>& spec = net.transition(binding.transition);
  const auto arc_places = net.arc_places(binding.transition);
  if (binding.token_ids.size() != spec.inputs.size()) {
    throw FiringError("binding arity mismatch for transition " + spec.name);
  }
  std::vector<TimedToken<Color>> consumed;
  consumed.reserve(binding.token_ids.size());
  for (std::size_t a = 0; a < binding.token_ids.size(); ++a) {
    const auto* entry = marking.find(arc_places[a], binding.token_ids[a]);
    if (entry == nullptr) {
      throw FiringError("stale binding: token no longer present for " +
                        spec.name);
    }
    const ArcSpec<Color>& arc = spec.inputs[a];
    if (arc.mature_only && entry->token.timestamp > clock) {
      throw FiringError("binding not enabled: immature token for " +
                        spec.name);
    }
    if (arc.filter && !arc.filter(entry->token.value)) {
      throw FiringError("binding not enabled: filter rejects token for " +
                        spec.name);
    }
    consumed.push_back(entry->token);
  }
  if (spec.guard &&
      !spec.guard({consumed.data(), consumed.size()}, clock)) {
    throw FiringError("binding not enabled: guard rejects binding for " +
                      spec.name);
  }

  const std::size_t before = marking.size();
  for (std::size_t a = 0; a < binding.token_ids.size(); ++a) {
    marking.remove(arc_places[a], binding.token_ids[a]);
  }
  Emitter<Color> emitter(net.place_count(), clock);
  if (spec.effect) {
    spec.effect({consumed.data(), consumed.size()}, clock, emitter);
  }
  for (const auto& [place, token] : emitter.produced()) {
    marking.add(place, token.value, token.timestamp);
  }
  // token conservation: |m'| = |m| - consumed + produced
  if (marking.size() !=
      before - binding.token_ids.size() + emitter.produced().size()) {
    throw FiringError("token conservation violated by " + spec.name);
  }
}

// Earliest time >= clock at which some transition becomes enabled, assuming
// nothing is enabled right now. Candidate instants are future token
// timestamps plus transition wake hints; enabling cannot change between
// them. nullopt means the marking is dead.
template <typename Color>
std::optional<SimTime> advance_clock(const Net<Color>& net,
                                     const Marking<Color>& marking,
                                     SimTime clock) {
  std::vector<SimTime> candidates;
  for (std::size_t p = 0; p < marking.place_count(); ++p) {
    for (const auto& entry : marking.tokens(p)) {
      if (entry.token.timestamp > clock) {
        candidates.push_back(entry.token.timestamp);
      }
    }
  }
  for (std::size_t t = 0; t < net.transition_count(); ++t) {
    const auto& hint = net.transition(t).wake_hint;
    if (hint) {
      if (auto h = hint(clock); h && *h > clock) {
        candidates.push_back(*h);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  for (SimTime t : candidates) {
    if (any_enabled(net, marking, t)) {
      return t;
    }
  }
  return std::nullopt;
}

enum class TieBreak { kCanonical, kSeededRandom };

struct RunOptions {
  bool record_trace = true;
  TieBreak tie_break = TieBreak::kCanonical;
  StochasticSource* tie_break_source = nullptr;  // required for kSeededRandom
};

template <typename Color>
struct FireEvent {
  SimTime time = 0;
  std::size_t transition = 0;
  std::span<const TimedToken<Color>> consumed;
  const Marking<Color>& marking;  // state after the firing
};

template <typename Color>
struct RunHooks {
  std::function<void(const FireEvent<Color>&)> on_fire;
  // Called at each quiescent instant: nothing enabled, clock about to move
  // (also once at the end of the run).
  std::function<void(SimTime, const Marking<Color>&)> on_quiescent;
};

struct TraceRecord {
  SimTime time = 0;
  std::size_t transition = 0;
  std::string summary;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  SimTime final_clock = 0;
  bool dead = false;
  std::uint64_t firings = 0;
};

namespace detail {

template <typename Color>
std::string binding_summary(const Net<Color>& net, std::size_t transition,
                            std::span<const TimedToken<Color>> consumed) {
  const auto arc_places = net.arc_places(transition);
  std::string s = net.transition(transition).name;
  s += '[';
  for (std::size_t a = 0; a < consumed.size(); ++a) {
    if (a > 0) {
      s += ' ';
    }
    s += net.place_name(arc_places[a]);
    if (net.color_printer()) {
      s += ':';
      s += net.color_printer()(consumed[a].value);
    }
    s += '@';
    s += std::to_string(consumed[a].timestamp);
  }
  s += ']';
  return s;
}

}  // namespace detail

// Alternates firing and clock advancement until the clock passes the horizon
// or the marking is dead. Firing policy is canonical order unless a seeded
// random tie-break is requested.
template <typename Color>
RunResult run(const Net<Color>& net, Marking<Color>& marking,
              SimTime start_clock, SimTime horizon,
              const RunOptions& options = {},
              const RunHooks<Color>& hooks = {}) {
  if (horizon <= 0) {
    throw std::invalid_argument("run: horizon must be > 0");
  }
  if (options.tie_break == TieBreak::kSeededRandom &&
      options.tie_break_source == nullptr) {
    throw std::invalid_argument("run: random tie-break needs a source");
  }
  RunResult result;
  SimTime clock = start_clock;
  while (true) {
    std::optional<Binding<Color>> next;
    if (options.tie_break == TieBreak::kCanonical) {
      next = first_enabled_binding(net, marking, clock);
    } else {
      auto all = enabled_bindings(net, marking, clock);
      if (!all.empty()) {
        next = std::move(all[options.tie_break_source->pick_index(all.size())]);
      }
    }
    if (next) {
      fire(net, marking, *next, clock);
      ++result.firings;
      if (hooks.on_fire) {
        hooks.on_fire(FireEvent<Color>{
            clock, next->transition,
            {next->tokens.data(), next->tokens.size()}, marking});
      }
      if (options.record_trace) {
        result.trace.push_back(
            {clock, next->transition,
             detail::binding_summary<Color>(
                 net, next->transition,
                 {next->tokens.data(), next->tokens.size()})});
      }
      continue;
    }
    if (hooks.on_quiescent) {
      hooks.on_quiescent(clock, marking);
    }
    const auto advanced = advance_clock(net, marking, clock);
    if (!advanced) {
      result.dead = true;
      break;
    }
    clock = *advanced;
    if (clock > horizon) {
      break;
    }
  }
  result.final_clock = clock;
  return result;
}

}  // namespace crsim
