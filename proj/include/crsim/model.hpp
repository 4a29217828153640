#pragma once

// IEEE 802.22 secondary-network model: an 8-place / 8-transition timed
// colored net over the kernel.
//
// Places:   New CR, New Channel, Free Channels, Preparing PU, PU Activity,
//           Channels Occupied by PUs, Cognitive Radio Nodes, SU Activity.
// Transitions: Creating CR, Using New Channel, Updating PU,
//           PU Activity Off/On, PU Activity On/Off, SU Using Channel,
//           SU Leaving Channel, Channel Updating.
//
// The Connecting step of the original net initializes a run rather than
// participating in steady-state behavior: try_start() checks the optional
// connection gate, scores the candidate channels, and seeds the marking
// with the first-SU token (delayed by the transient offset) and the primary
// channel pick.
//
// The base station operates one channel at a time (used_ch), toggling
// between the primary and backup pick whenever a licensed user appears on
// the operating channel; the retune takes |prim - back| * bandwidth *
// delay-per-MHz microseconds, during which no secondary transmission may
// start. Secondary transmissions hold the operating channel for an
// exponential subframe-mean duration and are cut short the instant a
// licensed user seizes the channel.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "crsim/config.hpp"
#include "crsim/event_log.hpp"
#include "crsim/kernel.hpp"
#include "crsim/metrics.hpp"
#include "crsim/random.hpp"
#include "crsim/time.hpp"

namespace crsim {

// ---- token colors ----------------------------------------------------------

struct SuArrivalToken {
  std::int32_t su_id = 0;
};

struct ChannelPickToken {
  std::int32_t channel_id = 0;
};

struct SecondaryUser {
  std::int32_t su_id = 0;
  std::int32_t channel_id = 0;  // 0 = not yet associated
  std::int32_t qos = 0;         // carried, not interpreted
  std::int32_t battery = 0;     // carried, not interpreted
};

struct ChannelToken {
  std::int32_t channel_id = 0;
  bool pu_present = false;
  std::int32_t using_su = 0;  // 0 = free
};

struct PuProcess {
  std::int32_t channel_id = 0;
  SimTime on_mean_us = 0;
  SimTime off_mean_us = 0;
  bool busy = false;
};

struct SuActivityToken {
  std::int32_t su_id = 0;
  std::int32_t channel_id = 0;
  SimTime started_at = 0;
  SimTime duration = 0;
};

using ModelColor = std::variant<SuArrivalToken, ChannelPickToken,
                                SecondaryUser, ChannelToken, PuProcess,
                                SuActivityToken>;

using ModelNet = Net<ModelColor>;
using ModelMarking = Marking<ModelColor>;

inline std::string model_color_to_string(const ModelColor& c) {
  char buf[96];
  int n = 0;
  if (const auto* v = std::get_if<SuArrivalToken>(&c)) {
    n = std::snprintf(buf, sizeof(buf), "arrival(%d)", v->su_id);
  } else if (const auto* v = std::get_if<ChannelPickToken>(&c)) {
    n = std::snprintf(buf, sizeof(buf), "pick(%d)", v->channel_id);
  } else if (const auto* v = std::get_if<SecondaryUser>(&c)) {
    n = std::snprintf(buf, sizeof(buf), "su(%d,ch%d)", v->su_id,
                      v->channel_id);
  } else if (const auto* v = std::get_if<ChannelToken>(&c)) {
    n = std::snprintf(buf, sizeof(buf), "ch(%d,pu=%d,su=%d)", v->channel_id,
                      v->pu_present ? 1 : 0, v->using_su);
  } else if (const auto* v = std::get_if<PuProcess>(&c)) {
    n = std::snprintf(buf, sizeof(buf), "pu(ch%d,%s)", v->channel_id,
                      v->busy ? "busy" : "idle");
  } else if (const auto* v = std::get_if<SuActivityToken>(&c)) {
    n = std::snprintf(buf, sizeof(buf), "act(su%d,ch%d,d=%lld)", v->su_id,
                      v->channel_id, static_cast<long long>(v->duration));
  }
  return std::string(buf, static_cast<std::size_t>(n));
}

// ---- channel selection -----------------------------------------------------

struct ChannelPeriods {
  std::int32_t channel_id = 0;
  SimTime on_mean_us = 0;
  SimTime off_mean_us = 0;
};

// Fraction of time a channel is PU-free: off / (on + off).
inline double availability(double on_mean, double off_mean) {
  if (on_mean < 0.0 || off_mean < 0.0 || (on_mean == 0.0 && off_mean == 0.0)) {
    throw std::invalid_argument(
        "availability: periods must be >= 0 and not both zero");
  }
  return off_mean / (on_mean + off_mean);
}

// Retune delay between two channels: |a - b| * bandwidth_MHz * delay/MHz.
inline SimTime switching_time(std::int32_t ch_a, std::int32_t ch_b,
                              double bandwidth_mhz,
                              double delay_per_mhz_us) {
  const double diff = std::abs(static_cast<double>(ch_a) - ch_b);
  return static_cast<SimTime>(
      std::llround(diff * bandwidth_mhz * delay_per_mhz_us));
}

// Base-station channel bookkeeping (the CPN globals of the original model).
struct NetworkState {
  std::int32_t prim = 0;
  std::int32_t back = 0;     // 0 = not yet selected
  std::int32_t used_ch = 0;  // operating channel, one of {prim, back}
  SimTime sw_time = 0;       // retune delay between prim and back
  SimTime real_sw_per = 0;   // absolute time the pending retune completes
};

// Channel with the greatest availability; ties break to the lowest id.
inline std::int32_t sel_primary_channel(
    std::span<const ChannelPeriods> channels) {
  if (channels.empty()) {
    throw std::invalid_argument("sel_primary_channel: no channels");
  }
  std::int32_t best_id = channels.front().channel_id;
  double best_a = availability(
      static_cast<double>(channels.front().on_mean_us),
      static_cast<double>(channels.front().off_mean_us));
  for (const ChannelPeriods& ch : channels.subspan(1)) {
    const double a = availability(static_cast<double>(ch.on_mean_us),
                                  static_cast<double>(ch.off_mean_us));
    if (a > best_a || (a == best_a && ch.channel_id < best_id)) {
      best_a = a;
      best_id = ch.channel_id;
    }
  }
  return best_id;
}

// Availability argmax over the non-primary channels. Returns 0 when a backup
// is already defined; otherwise selects it, stores it in the state and
// computes the prim<->back retune delay.
inline std::int32_t sel_backup_channel(std::span<const ChannelPeriods> channels,
                                       NetworkState& state,
                                       double bandwidth_mhz,
                                       double delay_per_mhz_us) {
  if (state.back != 0) {
    return 0;
  }
  const ChannelPeriods* best = nullptr;
  double best_a = -1.0;
  for (const ChannelPeriods& ch : channels) {
    if (ch.channel_id == state.prim) {
      continue;
    }
    const double a = availability(static_cast<double>(ch.on_mean_us),
                                  static_cast<double>(ch.off_mean_us));
    if (best == nullptr || a > best_a ||
        (a == best_a && ch.channel_id < best->channel_id)) {
      best = &ch;
      best_a = a;
    }
  }
  if (best == nullptr) {
    throw std::invalid_argument(
        "sel_backup_channel: no candidate besides the primary channel");
  }
  state.back = best->channel_id;
  state.sw_time = switching_time(state.prim, state.back, bandwidth_mhz,
                                 delay_per_mhz_us);
  return state.back;
}

// ---- per-run ledger driving ------------------------------------------------

// Feeds the period ledger from model events, keeping a per-SU accounting
// cursor so transmit/switching/idle partition presence exactly. Transmit
// intervals never overlap retune windows: a retune begins only when a PU
// seizes the operating channel, which cuts any transmission on it at that
// same instant, and no transmission starts before the retune completes.
class LedgerDriver {
 public:
  LedgerDriver(PeriodLedger& ledger, SimTime horizon)
      : ledger_(ledger), horizon_(horizon) {}

  void on_su_present(std::int32_t su, SimTime t) {
    auto [it, inserted] = sus_.emplace(su, SuState{t, t, std::nullopt});
    if (!inserted) {
      throw std::logic_error("duplicate SU id");
    }
    // arrival inside an open retune window accrues switching immediately
    const SimTime we = std::min(switch_until_, horizon_);
    if (t < we) {
      ledger_.record_interval(su, PeriodKind::kSwitching, we - t);
      it->second.cursor = we;
    }
  }

  void on_transmit_start(std::int32_t su, SimTime t) {
    auto it = sus_.find(su);
    if (it == sus_.end()) {
      // token injected behind the spawner's back: present from first sight
      it = sus_.emplace(su, SuState{t, t, std::nullopt}).first;
    }
    SuState& s = it->second;
    if (s.open_transmit) {
      throw std::logic_error("SU already transmitting");
    }
    s.open_transmit = t;
    ++transmissions_;
  }

  void on_transmit_end(std::int32_t su, SimTime end) { close_transmit(su, end); }

  void on_preempt(std::int32_t su, SimTime t) {
    ++preemptions_;
    close_transmit(su, t);
  }

  void on_switch(SimTime t, SimTime sw) {
    ++switches_;
    const SimTime ws = std::max(t, switch_until_);
    const SimTime we = t + sw;
    switch_until_ = std::max(switch_until_, we);
    const SimTime ws_c = std::min(ws, horizon_);
    const SimTime we_c = std::min(we, horizon_);
    for (auto& [su, s] : sus_) {
      close_transmit_locked(su, s, t);  // preemption lands at this instant
      const SimTime from = std::max(ws_c, s.cursor);
      if (from >= we_c) {
        continue;
      }
      if (from > s.cursor) {
        ledger_.record_interval(su, PeriodKind::kIdle, from - s.cursor);
      }
      ledger_.record_interval(su, PeriodKind::kSwitching, we_c - from);
      s.cursor = we_c;
    }
  }

  // Idle-fill to the horizon and fix presence. Open transmissions must have
  // been closed by the caller (it owns the activity tokens).
  void finalize() {
    for (auto& [su, s] : sus_) {
      if (s.open_transmit) {
        throw std::logic_error("finalize with an open transmission");
      }
      if (horizon_ > s.cursor) {
        ledger_.record_interval(su, PeriodKind::kIdle, horizon_ - s.cursor);
        s.cursor = horizon_;
      }
      ledger_.set_presence(su, horizon_ - s.arrival);
    }
  }

  std::optional<SimTime> arrival_time(std::int32_t su) const {
    auto it = sus_.find(su);
    if (it == sus_.end()) {
      return std::nullopt;
    }
    return it->second.arrival;
  }

  std::size_t present_su_count() const { return sus_.size(); }
  std::uint64_t switch_count() const { return switches_; }
  std::uint64_t preemption_count() const { return preemptions_; }
  std::uint64_t transmission_count() const { return transmissions_; }

 private:
  struct SuState {
    SimTime arrival = 0;
    SimTime cursor = 0;  // end of accounted time
    std::optional<SimTime> open_transmit;
  };

  void close_transmit(std::int32_t su, SimTime end) {
    close_transmit_locked(su, sus_.at(su), end);
  }

  void close_transmit_locked(std::int32_t su, SuState& s, SimTime end) {
    if (!s.open_transmit) {
      return;
    }
    const SimTime start = std::min(*s.open_transmit, horizon_);
    const SimTime stop = std::min(end, horizon_);
    if (start < s.cursor || stop < start) {
      throw std::logic_error("transmit interval overlaps accounted time");
    }
    if (start > s.cursor) {
      ledger_.record_interval(su, PeriodKind::kIdle, start - s.cursor);
    }
    ledger_.record_interval(su, PeriodKind::kTransmit, stop - start);
    s.cursor = stop;
    s.open_transmit.reset();
  }

  PeriodLedger& ledger_;
  SimTime horizon_;
  std::map<std::int32_t, SuState> sus_;
  SimTime switch_until_ = 0;
  std::uint64_t switches_ = 0;
  std::uint64_t preemptions_ = 0;
  std::uint64_t transmissions_ = 0;
};

// ---- the model -------------------------------------------------------------

class CrModel {
 public:
  enum Place : std::size_t {
    kNewCr,
    kNewChannel,
    kFreeChannels,
    kPreparingPu,
    kPuActivity,
    kOccupiedChannels,
    kCrNodes,
    kSuActivity,
    kPlaceCount,
  };

  enum Transition : std::size_t {
    kCreatingCr,
    kUsingNewChannel,
    kUpdatingPu,
    kPuOffOn,
    kPuOnOff,
    kSuUsingChannel,
    kSuLeavingChannel,
    kChannelUpdating,
    kTransitionCount,
  };

  // gate_probe reports whether the external log consumer is attached; it is
  // only consulted when the config gates the start on a connection.
  // preset_periods, when non-empty, bypasses random period generation (ids
  // must be 1..num_channels in order).
  CrModel(const Config& cfg, StochasticSource& source, PeriodLedger& ledger,
          EventEmitter* events = nullptr,
          std::function<bool()> gate_probe = nullptr,
          std::vector<ChannelPeriods> preset_periods = {})
      : cfg_(cfg),
        source_(source),
        events_(events),
        gate_probe_(std::move(gate_probe)),
        driver_(ledger, cfg.sim_time_us()),
        periods_(std::move(preset_periods)),
        channel_spawned_(static_cast<std::size_t>(cfg.num_channels) + 1,
                         false),
        net_(build_model_net()),
        marking_(net_.empty_marking()) {
    if (!periods_.empty()) {
      if (periods_.size() != static_cast<std::size_t>(cfg_.num_channels)) {
        throw std::invalid_argument("preset periods must cover every channel");
      }
      for (std::size_t i = 0; i < periods_.size(); ++i) {
        if (periods_[i].channel_id != static_cast<std::int32_t>(i + 1)) {
          throw std::invalid_argument("preset periods must be ids 1..N");
        }
      }
    }
    net_.set_color_printer(model_color_to_string);
  }

  CrModel(const CrModel&) = delete;
  CrModel& operator=(const CrModel&) = delete;

  // The Connecting step: refuses to start while the connection gate is
  // closed; otherwise generates/scores the channel periods, selects the
  // primary channel and seeds the marking with the first-SU arrival token
  // and the primary channel pick.
  bool try_start(SimTime clock = 0) {
    if (started_) {
      throw std::logic_error("model already started");
    }
    if (cfg_.gate_on_connection && (!gate_probe_ || !gate_probe_())) {
      return false;
    }
    if (periods_.empty()) {
      periods_.reserve(static_cast<std::size_t>(cfg_.num_channels));
      for (std::int32_t ch = 1; ch <= cfg_.num_channels; ++ch) {
        const SimTime on = seconds_to_us(source_.uniform(
            cfg_.pu_on_mean_range_s.first, cfg_.pu_on_mean_range_s.second));
        const SimTime off = seconds_to_us(source_.uniform(
            cfg_.pu_off_mean_range_s.first, cfg_.pu_off_mean_range_s.second));
        periods_.push_back({ch, on, off});
      }
    }
    state_.prim = sel_primary_channel(periods_);
    state_.used_ch = state_.prim;
    start_clock_ = clock;
    marking_.add(kNewCr, SuArrivalToken{1},
                 clock + cfg_.transient_offset_us());
    marking_.add(kNewChannel, ChannelPickToken{state_.prim}, clock);
    channel_spawned_[static_cast<std::size_t>(state_.prim)] = true;
    if (cfg_.model_all_pu) {
      for (std::int32_t ch = 1; ch <= cfg_.num_channels; ++ch) {
        if (ch == state_.prim) {
          continue;
        }
        marking_.add(kNewChannel, ChannelPickToken{ch}, clock);
        channel_spawned_[static_cast<std::size_t>(ch)] = true;
      }
    }
    started_ = true;
    return true;
  }

  RunResult run(SimTime horizon, const RunHooks<ModelColor>& hooks = {},
                RunOptions options = RunOptions{.record_trace = false}) {
    if (!started_) {
      throw std::logic_error("run before start");
    }
    return crsim::run(net_, marking_, start_clock_, horizon, options, hooks);
  }

  // Closes in-flight transmissions at the horizon and completes the per-SU
  // time partition (idle fill + presence).
  void finalize(SimTime horizon) {
    for (const auto& entry : marking_.tokens(kSuActivity)) {
      const auto& act = std::get<SuActivityToken>(entry.token.value);
      driver_.on_transmit_end(act.su_id,
                              std::min(act.started_at + act.duration, horizon));
    }
    driver_.finalize();
  }

  ModelNet& net() { return net_; }
  ModelMarking& marking() { return marking_; }
  const NetworkState& state() const { return state_; }
  std::span<const ChannelPeriods> channel_periods() const {
    return {periods_.data(), periods_.size()};
  }
  const LedgerDriver& driver() const { return driver_; }
  std::uint64_t pu_on_events() const { return pu_on_events_; }

 private:
  void emit_event(EventKind kind, std::int64_t a, std::int64_t b,
                  SimTime clock) {
    if (events_ != nullptr) {
      events_->emit(EventRecord{clock, kind, a, b});
    }
  }

  ModelNet build_model_net() {
    using Tokens = std::span<const TimedToken<ModelColor>>;

    std::vector<std::string> places = {
        "New CR",          "New Channel",
        "Free Channels",   "Preparing PU",
        "PU Activity",     "Channels Occupied by PUs",
        "Cognitive Radio Nodes", "SU Activity",
    };

    auto is_idle_pu = [](const ModelColor& c) {
      const auto* pu = std::get_if<PuProcess>(&c);
      return pu != nullptr && !pu->busy;
    };
    auto is_busy_pu = [](const ModelColor& c) {
      const auto* pu = std::get_if<PuProcess>(&c);
      return pu != nullptr && pu->busy;
    };
    auto is_channel = [](const ModelColor& c) {
      return std::holds_alternative<ChannelToken>(c);
    };
    auto same_channel_as_pu = [](Tokens t, SimTime) {
      return std::get<PuProcess>(t[0].value).channel_id ==
             std::get<ChannelToken>(t[1].value).channel_id;
    };

    std::vector<TransitionSpec<ModelColor>> transitions(kTransitionCount);

    // Creating CR: introduces the secondary users once the channels exist.
    auto& creating = transitions[kCreatingCr];
    creating.name = "Creating CR";
    creating.priority = 4;
    creating.inputs = {{"New CR",
                        [](const ModelColor& c) {
                          return std::holds_alternative<SuArrivalToken>(c);
                        }}};
    creating.effect = [this](Tokens t, SimTime clock, Emitter<ModelColor>& em) {
      const auto arrival = std::get<SuArrivalToken>(t[0].value);
      if (cfg_.su_arrival == SuArrival::kBatch) {
        for (std::int32_t i = 1; i <= cfg_.su_count; ++i) {
          em.emit(kCrNodes, SecondaryUser{i, 0, 0, 0}, clock);
          driver_.on_su_present(i, clock);
        }
      } else {
        em.emit(kCrNodes, SecondaryUser{arrival.su_id, 0, 0, 0}, clock);
        driver_.on_su_present(arrival.su_id, clock);
        if (arrival.su_id < cfg_.su_count) {
          em.emit(kNewCr, SuArrivalToken{arrival.su_id + 1},
                  clock + cfg_.su_arrival_gap_us());
        }
      }
    };

    // Using New Channel: materializes a picked channel and its PU process.
    auto& using_new = transitions[kUsingNewChannel];
    using_new.name = "Using New Channel";
    using_new.priority = 2;
    using_new.inputs = {{"New Channel",
                         [](const ModelColor& c) {
                           return std::holds_alternative<ChannelPickToken>(c);
                         }}};
    using_new.effect = [this](Tokens t, SimTime clock,
                              Emitter<ModelColor>& em) {
      const auto pick = std::get<ChannelPickToken>(t[0].value);
      const ChannelPeriods& per =
          periods_.at(static_cast<std::size_t>(pick.channel_id - 1));
      em.emit(kFreeChannels, ChannelToken{pick.channel_id, false, 0}, clock);
      em.emit(kPreparingPu,
              PuProcess{pick.channel_id, per.on_mean_us, per.off_mean_us,
                        false},
              clock);
    };

    // Updating PU: the PU enters the net idle, due to wake after an
    // exponential OFF period; the first firing also picks the backup channel.
    auto& updating = transitions[kUpdatingPu];
    updating.name = "Updating PU";
    updating.priority = 3;
    updating.inputs = {{"Preparing PU", is_idle_pu}};
    updating.effect = [this](Tokens t, SimTime clock,
                             Emitter<ModelColor>& em) {
      const auto pu = std::get<PuProcess>(t[0].value);
      em.emit(kPuActivity, pu,
              clock + source_.exponential_us(
                          static_cast<double>(pu.off_mean_us)));
      const std::int32_t backup =
          sel_backup_channel(periods_, state_, cfg_.bandwidth_mhz,
                             cfg_.switch_delay_us_per_mhz);
      if (backup != 0 &&
          !channel_spawned_[static_cast<std::size_t>(backup)]) {
        em.emit(kNewChannel, ChannelPickToken{backup}, clock);
        channel_spawned_[static_cast<std::size_t>(backup)] = true;
      }
    };

    // PU Activity Off/On: a licensed user seizes its channel. If that is the
    // operating channel the base station retunes to the other pick.
    auto& pu_off_on = transitions[kPuOffOn];
    pu_off_on.name = "PU Activity Off/On";
    pu_off_on.priority = 6;
    pu_off_on.inputs = {{"PU Activity", is_idle_pu},
                        {"Free Channels", is_channel}};
    pu_off_on.guard = same_channel_as_pu;
    pu_off_on.effect = [this](Tokens t, SimTime clock,
                              Emitter<ModelColor>& em) {
      const auto pu = std::get<PuProcess>(t[0].value);
      const auto ch = std::get<ChannelToken>(t[1].value);
      em.emit(kOccupiedChannels,
              ChannelToken{ch.channel_id, true, ch.using_su}, clock);
      em.emit(kPuActivity,
              PuProcess{pu.channel_id, pu.on_mean_us, pu.off_mean_us, true},
              clock + source_.exponential_us(
                          static_cast<double>(pu.on_mean_us)));
      ++pu_on_events_;
      emit_event(EventKind::kPuOffOn, ch.using_su, ch.channel_id, clock);
      if (ch.channel_id == state_.used_ch) {
        emit_event(EventKind::kSwitching, state_.sw_time, 0, clock);
        state_.real_sw_per = state_.sw_time + clock;
        state_.used_ch =
            ch.channel_id == state_.prim ? state_.back : state_.prim;
        driver_.on_switch(clock, state_.sw_time);
      }
    };

    // PU Activity On/Off: the licensed user leaves; the channel frees up.
    auto& pu_on_off = transitions[kPuOnOff];
    pu_on_off.name = "PU Activity On/Off";
    pu_on_off.priority = 5;
    pu_on_off.inputs = {{"PU Activity", is_busy_pu},
                        {"Channels Occupied by PUs", is_channel}};
    pu_on_off.guard = same_channel_as_pu;
    pu_on_off.effect = [this](Tokens t, SimTime clock,
                              Emitter<ModelColor>& em) {
      const auto pu = std::get<PuProcess>(t[0].value);
      const auto ch = std::get<ChannelToken>(t[1].value);
      em.emit(kFreeChannels, ChannelToken{ch.channel_id, false, 0}, clock);
      em.emit(kPuActivity,
              PuProcess{pu.channel_id, pu.on_mean_us, pu.off_mean_us, false},
              clock + source_.exponential_us(
                          static_cast<double>(pu.off_mean_us)));
      emit_event(EventKind::kPuOnOff, ch.channel_id, 0, clock);
    };

    // SU Using Channel: an idle SU occupies the free operating channel for
    // an exponential subframe-mean duration; blocked while a retune is in
    // progress.
    auto& su_using = transitions[kSuUsingChannel];
    su_using.name = "SU Using Channel";
    su_using.priority = 7;
    su_using.inputs = {
        {"Cognitive Radio Nodes",
         [](const ModelColor& c) {
           return std::holds_alternative<SecondaryUser>(c);
         }},
        {"Free Channels",
         [this](const ModelColor& c) {
           const auto* ch = std::get_if<ChannelToken>(&c);
           return ch != nullptr && ch->channel_id == state_.used_ch &&
                  ch->using_su == 0;
         }},
    };
    su_using.guard = [this](Tokens, SimTime clock) {
      return clock >= state_.real_sw_per;
    };
    su_using.wake_hint = [this](SimTime clock) -> std::optional<SimTime> {
      if (state_.real_sw_per > clock) {
        return state_.real_sw_per;
      }
      return std::nullopt;
    };
    su_using.effect = [this](Tokens t, SimTime clock,
                             Emitter<ModelColor>& em) {
      const auto su = std::get<SecondaryUser>(t[0].value);
      const auto ch = std::get<ChannelToken>(t[1].value);
      const SimTime d = source_.exponential_us(
          static_cast<double>(cfg_.subframe_us()));
      em.emit(kFreeChannels, ChannelToken{ch.channel_id, false, su.su_id},
              clock);
      em.emit(kCrNodes,
              SecondaryUser{su.su_id, ch.channel_id, su.qos, su.battery},
              clock);
      em.emit(kSuActivity,
              SuActivityToken{su.su_id, ch.channel_id, clock, d}, clock + d);
      emit_event(EventKind::kSuUsing, su.su_id, d, clock);
      driver_.on_transmit_start(su.su_id, clock);
    };

    // SU Leaving Channel: the transmission ran to completion; the channel is
    // ready for another SU.
    auto& su_leaving = transitions[kSuLeavingChannel];
    su_leaving.name = "SU Leaving Channel";
    su_leaving.priority = 1;
    su_leaving.inputs = {
        {"SU Activity",
         [](const ModelColor& c) {
           return std::holds_alternative<SuActivityToken>(c);
         }},
        {"Free Channels", is_channel},
    };
    su_leaving.guard = [](Tokens t, SimTime) {
      const auto& act = std::get<SuActivityToken>(t[0].value);
      const auto& ch = std::get<ChannelToken>(t[1].value);
      return act.channel_id == ch.channel_id && ch.using_su == act.su_id;
    };
    su_leaving.effect = [this](Tokens t, SimTime clock,
                               Emitter<ModelColor>& em) {
      const auto act = std::get<SuActivityToken>(t[0].value);
      em.emit(kFreeChannels, ChannelToken{act.channel_id, false, 0}, clock);
      driver_.on_transmit_end(act.su_id, act.started_at + act.duration);
    };

    // Channel Updating: clears the surplus activity token the instant its
    // channel is seized by a PU. The activity token is consumed before it
    // matures (the mature_only opt-out), cutting the transmission short.
    auto& channel_updating = transitions[kChannelUpdating];
    channel_updating.name = "Channel Updating";
    channel_updating.priority = 0;
    channel_updating.inputs = {
        {"SU Activity",
         [](const ModelColor& c) {
           return std::holds_alternative<SuActivityToken>(c);
         },
         /*mature_only=*/false},
        {"Channels Occupied by PUs", is_channel},
    };
    channel_updating.guard = [](Tokens t, SimTime) {
      return std::get<SuActivityToken>(t[0].value).channel_id ==
             std::get<ChannelToken>(t[1].value).channel_id;
    };
    channel_updating.effect = [this](Tokens t, SimTime clock,
                                     Emitter<ModelColor>& em) {
      const auto act = std::get<SuActivityToken>(t[0].value);
      const auto ch = std::get<ChannelToken>(t[1].value);
      em.emit(kOccupiedChannels, ch, clock);
      driver_.on_preempt(act.su_id, clock);
      emit_event(EventKind::kSuPreempted, act.su_id, act.channel_id, clock);
    };

    return ModelNet(std::move(places), std::move(transitions));
  }

  const Config& cfg_;
  StochasticSource& source_;
  EventEmitter* events_;
  std::function<bool()> gate_probe_;
  LedgerDriver driver_;
  NetworkState state_;
  std::vector<ChannelPeriods> periods_;
  std::vector<bool> channel_spawned_;
  std::uint64_t pu_on_events_ = 0;
  bool started_ = false;
  SimTime start_clock_ = 0;
  ModelNet net_;
  ModelMarking marking_;
};

}  // namespace crsim
