#pragma once

// Per-SU time-partition ledger and the per-frame energy metric.
//
// The ledger accumulates integer microseconds so the transmit/idle/switching
// partition stays exact; seconds are derived on read. Energy follows the
// published formula with the circuit term read additively:
//
//   E = (T*Pt + I*Pi + S*Ps + SimTime*Pc) * frame / SimTime   [mJ]
//
// because the multiplicative circuit term, as printed, is dimensionally
// inconsistent (mW*mW) and cannot reproduce the reported magnitudes. The
// literal reading stays available behind Eq1Mode::kLiteral for comparison.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "crsim/time.hpp"

namespace crsim {

struct PowerProfile {
  double trans_power_mw = 1980.0;
  double idle_power_mw = 990.0;
  double circuit_power_mw = 210.0;
  double switch_power_mw = 1000.0;
};

enum class PeriodKind { kTransmit, kIdle, kSwitching };

enum class Eq1Mode { kAdditive, kLiteral };

class PeriodLedger {
 public:
  struct SuPeriods {
    SimTime transmit_us = 0;
    SimTime idle_us = 0;
    SimTime switching_us = 0;
    SimTime presence_us = 0;
  };

  void record_interval(std::int32_t su_id, PeriodKind kind, SimTime duration) {
    if (duration < 0) {
      throw std::invalid_argument("record_interval: negative duration");
    }
    SuPeriods& p = sus_[su_id];
    switch (kind) {
      case PeriodKind::kTransmit:
        p.transmit_us += duration;
        break;
      case PeriodKind::kIdle:
        p.idle_us += duration;
        break;
      case PeriodKind::kSwitching:
        p.switching_us += duration;
        break;
    }
  }

  void set_presence(std::int32_t su_id, SimTime duration) {
    if (duration < 0) {
      throw std::invalid_argument("set_presence: negative duration");
    }
    sus_[su_id].presence_us = duration;
  }

  bool contains(std::int32_t su_id) const { return sus_.count(su_id) != 0; }

  const SuPeriods& periods(std::int32_t su_id) const {
    auto it = sus_.find(su_id);
    if (it == sus_.end()) {
      throw std::invalid_argument("unknown SU id in ledger");
    }
    return it->second;
  }

  double transmit_s(std::int32_t su) const {
    return us_to_seconds(periods(su).transmit_us);
  }
  double idle_s(std::int32_t su) const {
    return us_to_seconds(periods(su).idle_us);
  }
  double switching_s(std::int32_t su) const {
    return us_to_seconds(periods(su).switching_us);
  }
  double presence_s(std::int32_t su) const {
    return us_to_seconds(periods(su).presence_us);
  }

  std::vector<std::int32_t> su_ids() const {
    std::vector<std::int32_t> ids;
    ids.reserve(sus_.size());
    for (const auto& [id, _] : sus_) {
      ids.push_back(id);
    }
    return ids;  // std::map keeps them sorted
  }

  std::size_t su_count() const { return sus_.size(); }

 private:
  std::map<std::int32_t, SuPeriods> sus_;
};

// Energy consumed by one SU, normalized to a single frame, in millijoules.
// Periods are in seconds, powers in mW.
inline double energy_per_su_per_frame(const PeriodLedger& ledger,
                                      std::int32_t su_id,
                                      const PowerProfile& powers,
                                      double frame_s, double sim_time_s,
                                      Eq1Mode mode = Eq1Mode::kAdditive) {
  if (!(sim_time_s > 0.0)) {
    throw std::invalid_argument("energy_per_su_per_frame: sim_time must be > 0");
  }
  const double bracket = ledger.transmit_s(su_id) * powers.trans_power_mw +
                         ledger.idle_s(su_id) * powers.idle_power_mw +
                         ledger.switching_s(su_id) * powers.switch_power_mw;
  if (mode == Eq1Mode::kLiteral) {
    return bracket * powers.circuit_power_mw * frame_s / sim_time_s;
  }
  return (bracket + sim_time_s * powers.circuit_power_mw) * frame_s /
         sim_time_s;
}

struct Aggregate {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
};

// Sample mean and Student-t 95% confidence half-width (n - 1 dof).
inline Aggregate aggregate_rounds(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw std::invalid_argument("aggregate_rounds: need at least 2 values");
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(dist, 0.975);
  return {mean, t * stddev / std::sqrt(static_cast<double>(n))};
}

inline Aggregate aggregate_rounds(const std::vector<double>& values) {
  return aggregate_rounds(std::span<const double>(values.data(), values.size()));
}

// Per-round experiment output.
struct SuRoundStats {
  std::int32_t su_id = 0;
  double energy_mj = 0.0;
  double transmit_s = 0.0;
  double idle_s = 0.0;
  double switching_s = 0.0;
  double presence_s = 0.0;
};

struct RoundResult {
  int round_index = 0;  // 1-based
  std::uint64_t seed = 0;
  double mean_energy_mj = 0.0;
  double mean_transmit_s = 0.0;
  double mean_idle_s = 0.0;
  double mean_switching_s = 0.0;
  std::uint64_t switch_count = 0;
  std::uint64_t pu_on_events = 0;
  std::vector<SuRoundStats> per_su;
};

}  // namespace crsim
