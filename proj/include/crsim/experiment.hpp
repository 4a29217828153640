#pragma once

// Multi-round experiment orchestration: per-round seeds derived from the
// master seed, independent runs, cross-round aggregation and CSV output.
//
// Rounds are independent and may execute in parallel; results are always
// reported in round order, so the output is identical either way. When an
// event sink is attached the rounds run sequentially on the caller's thread
// to keep the event stream in emission order.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "crsim/config.hpp"
#include "crsim/event_log.hpp"
#include "crsim/metrics.hpp"
#include "crsim/model.hpp"
#include "crsim/random.hpp"

namespace crsim {

struct ExperimentResult {
  std::vector<RoundResult> rounds;
  double mean_energy_mj = 0.0;
  std::optional<double> ci95_halfwidth;  // empty with a single round
  std::optional<double> rel_halfwidth_pct;
};

inline RoundResult run_round(const Config& cfg, int round_index,
                             std::uint64_t seed,
                             EventEmitter* events = nullptr,
                             std::function<bool()> gate_probe = nullptr) {
  StochasticSource source(seed);
  PeriodLedger ledger;
  CrModel model(cfg, source, ledger, events, std::move(gate_probe));
  if (!model.try_start(0)) {
    throw std::runtime_error(
        "simulation start is gated on a connection and no client is attached");
  }
  const SimTime horizon = cfg.sim_time_us();
  model.run(horizon);
  model.finalize(horizon);

  const auto ids = ledger.su_ids();
  if (ids.empty()) {
    throw std::runtime_error(
        "no secondary user arrived before the simulation horizon");
  }
  RoundResult result;
  result.round_index = round_index;
  result.seed = seed;
  const PowerProfile powers = cfg.power_profile();
  for (std::int32_t id : ids) {
    SuRoundStats stats;
    stats.su_id = id;
    stats.energy_mj = energy_per_su_per_frame(ledger, id, powers, cfg.frame_s,
                                              cfg.sim_time_s, cfg.eq1_mode);
    stats.transmit_s = ledger.transmit_s(id);
    stats.idle_s = ledger.idle_s(id);
    stats.switching_s = ledger.switching_s(id);
    stats.presence_s = ledger.presence_s(id);
    result.mean_energy_mj += stats.energy_mj;
    result.mean_transmit_s += stats.transmit_s;
    result.mean_idle_s += stats.idle_s;
    result.mean_switching_s += stats.switching_s;
    result.per_su.push_back(stats);
  }
  const double n = static_cast<double>(ids.size());
  result.mean_energy_mj /= n;
  result.mean_transmit_s /= n;
  result.mean_idle_s /= n;
  result.mean_switching_s /= n;
  result.switch_count = model.driver().switch_count();
  result.pu_on_events = model.pu_on_events();
  return result;
}

// jobs = 0 picks one worker per hardware thread; streaming forces one.
inline ExperimentResult run_experiment(
    const Config& cfg, EventEmitter* events = nullptr,
    std::function<bool()> gate_probe = nullptr, unsigned jobs = 0) {
  cfg.validate();
  const int rounds = cfg.rounds;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(rounds));
  for (int i = 0; i < rounds; ++i) {
    seeds[static_cast<std::size_t>(i)] =
        derive_round_seed(cfg.seed, static_cast<std::uint64_t>(i) + 1);
  }

  ExperimentResult result;
  result.rounds.resize(static_cast<std::size_t>(rounds));
  std::vector<std::string> errors(static_cast<std::size_t>(rounds));

  auto execute = [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      result.rounds[idx] =
          run_round(cfg, i + 1, seeds[idx], events, gate_probe);
    } catch (const std::exception& e) {
      errors[idx] = "round " + std::to_string(i + 1) + " (seed " +
                    std::to_string(seeds[idx]) + "): " + e.what();
    }
  };

  const bool streaming = events != nullptr && events->has_sinks();
  if (jobs == 0) {
    jobs = std::thread::hardware_concurrency();
    if (jobs == 0) {
      jobs = 1;
    }
  }
  jobs = std::min(jobs, static_cast<unsigned>(rounds));
  if (streaming || jobs <= 1) {
    for (int i = 0; i < rounds; ++i) {
      execute(i);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (int i = next.fetch_add(1); i < rounds; i = next.fetch_add(1)) {
          execute(i);
        }
      });
    }
    for (auto& t : workers) {
      t.join();
    }
  }
  for (const std::string& err : errors) {
    if (!err.empty()) {
      throw std::runtime_error(err);
    }
  }

  std::vector<double> energies;
  energies.reserve(result.rounds.size());
  for (const RoundResult& r : result.rounds) {
    energies.push_back(r.mean_energy_mj);
  }
  if (energies.size() >= 2) {
    const Aggregate agg = aggregate_rounds(energies);
    result.mean_energy_mj = agg.mean;
    result.ci95_halfwidth = agg.ci95_halfwidth;
    if (agg.mean != 0.0) {
      result.rel_halfwidth_pct = 100.0 * agg.ci95_halfwidth / agg.mean;
    }
  } else {
    result.mean_energy_mj = energies.front();
  }
  return result;
}

// CSV schema: one row per round, then a '#'-prefixed summary row.
inline std::string to_csv(const ExperimentResult& result) {
  std::string out =
      "round,seed,mean_energy_mj_per_frame,trans_s,idle_s,switching_s,"
      "switch_count,pu_on_events\n";
  char buf[256];
  for (const RoundResult& r : result.rounds) {
    std::snprintf(buf, sizeof(buf), "%d,%llu,%.6f,%.6f,%.6f,%.6f,%llu,%llu\n",
                  r.round_index, static_cast<unsigned long long>(r.seed),
                  r.mean_energy_mj, r.mean_transmit_s, r.mean_idle_s,
                  r.mean_switching_s,
                  static_cast<unsigned long long>(r.switch_count),
                  static_cast<unsigned long long>(r.pu_on_events));
    out += buf;
  }
  if (result.ci95_halfwidth) {
    std::snprintf(buf, sizeof(buf),
                  "# mean_energy_mj_per_frame=%.6f ci95_halfwidth_mj=%.6f "
                  "rel_halfwidth_pct=%.6f rounds=%zu\n",
                  result.mean_energy_mj, *result.ci95_halfwidth,
                  result.rel_halfwidth_pct.value_or(0.0),
                  result.rounds.size());
  } else {
    std::snprintf(buf, sizeof(buf),
                  "# mean_energy_mj_per_frame=%.6f ci95_halfwidth_mj=n/a "
                  "rel_halfwidth_pct=n/a rounds=%zu\n",
                  result.mean_energy_mj, result.rounds.size());
  }
  out += buf;
  return out;
}

inline void write_csv(const std::string& path, const ExperimentResult& result) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  const std::string csv = to_csv(result);
  out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
}

inline std::string summary_text(const ExperimentResult& result) {
  char buf[256];
  if (result.ci95_halfwidth) {
    std::snprintf(buf, sizeof(buf),
                  "mean energy per SU per frame: %.3f mJ +/- %.3f mJ "
                  "(95%% CI, %.2f%% relative) over %zu rounds",
                  result.mean_energy_mj, *result.ci95_halfwidth,
                  result.rel_halfwidth_pct.value_or(0.0),
                  result.rounds.size());
  } else {
    std::snprintf(buf, sizeof(buf),
                  "mean energy per SU per frame: %.3f mJ (single round, "
                  "no confidence interval)",
                  result.mean_energy_mj);
  }
  return buf;
}

}  // namespace crsim
