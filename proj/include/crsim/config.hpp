#pragma once

// Experiment configuration.
//
// File format: line-oriented `key = value`. Blank lines and lines starting
// with '#' are ignored. Unknown keys are rejected with the offending line
// number. Ranges take two comma-separated numbers (`pu_off_mean_range_s =
// 1,10`). Booleans are `true`/`false`. Shipped defaults are the published
// simulation parameters; su_count, subframe_s, the PU period ranges and the
// arrival pattern are calibration knobs (see README).

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "crsim/metrics.hpp"
#include "crsim/time.hpp"

namespace crsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SuArrival { kBatch, kInterval };

struct Config {
  int num_channels = 50;
  double bandwidth_mhz = 5.0;
  double trans_power_mw = 1980.0;
  double idle_power_mw = 990.0;
  double circuit_power_mw = 210.0;
  double switch_power_mw = 1000.0;
  double switch_delay_us_per_mhz = 100.0;  // 0.1 ms/MHz
  double sim_time_s = 3600.0;
  double frame_s = 0.1;
  double subframe_s = 0.05;  // frame/2; calibration knob
  int su_count = 10;         // calibration knob
  SuArrival su_arrival = SuArrival::kBatch;
  double su_arrival_gap_ms = 50.0;  // used by the interval pattern
  double transient_offset_ms = 100.0;
  std::pair<double, double> pu_off_mean_range_s{1.0, 10.0};
  std::pair<double, double> pu_on_mean_range_s{1.0, 10.0};
  int rounds = 40;
  std::uint64_t seed = 1;
  Eq1Mode eq1_mode = Eq1Mode::kAdditive;
  bool gate_on_connection = false;
  int tcp_port = 9000;
  std::string selection_metric = "availability";
  bool timestamp_prefix = false;
  bool model_all_pu = false;

  SimTime sim_time_us() const { return seconds_to_us(sim_time_s); }
  SimTime subframe_us() const { return seconds_to_us(subframe_s); }
  SimTime transient_offset_us() const {
    return millis_to_us(transient_offset_ms);
  }
  SimTime su_arrival_gap_us() const { return millis_to_us(su_arrival_gap_ms); }

  PowerProfile power_profile() const {
    return {trans_power_mw, idle_power_mw, circuit_power_mw, switch_power_mw};
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) {
        throw ConfigError(std::string(name) + " must be > 0");
      }
    };
    if (num_channels < 1) {
      throw ConfigError("num_channels must be >= 1");
    }
    positive(bandwidth_mhz, "bandwidth_mhz");
    positive(trans_power_mw, "trans_power_mw");
    positive(idle_power_mw, "idle_power_mw");
    positive(circuit_power_mw, "circuit_power_mw");
    positive(switch_power_mw, "switch_power_mw");
    positive(switch_delay_us_per_mhz, "switch_delay_us_per_mhz");
    positive(sim_time_s, "sim_time_s");
    positive(frame_s, "frame_s");
    positive(subframe_s, "subframe_s");
    if (su_count < 1) {
      throw ConfigError("su_count must be >= 1");
    }
    if (su_arrival_gap_ms < 0.0) {
      throw ConfigError("su_arrival_gap_ms must be >= 0");
    }
    if (transient_offset_ms < 0.0) {
      throw ConfigError("transient_offset_ms must be >= 0");
    }
    auto ordered_range = [&](const std::pair<double, double>& r,
                             const char* name) {
      if (!(r.first > 0.0) || r.second < r.first) {
        throw ConfigError(std::string(name) +
                          " must satisfy 0 < lo <= hi");
      }
    };
    ordered_range(pu_off_mean_range_s, "pu_off_mean_range_s");
    ordered_range(pu_on_mean_range_s, "pu_on_mean_range_s");
    if (rounds < 1) {
      throw ConfigError("rounds must be >= 1");
    }
    if (tcp_port < 0 || tcp_port > 65535) {
      throw ConfigError("tcp_port must be in [0, 65535]");
    }
    if (selection_metric != "availability") {
      throw ConfigError("unsupported selection_metric: " + selection_metric);
    }
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] inline void config_fail(const std::string& source, int line,
                                     const std::string& what) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

inline double parse_double(std::string_view v, const std::string& source,
                           int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(std::string(v), &pos);
    if (pos != v.size()) {
      config_fail(source, line, "trailing characters in number");
    }
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    config_fail(source, line, "not a number: '" + std::string(v) + "'");
  }
}

inline long long parse_int(std::string_view v, const std::string& source,
                           int line) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(std::string(v), &pos);
    if (pos != v.size()) {
      config_fail(source, line, "trailing characters in integer");
    }
    return i;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    config_fail(source, line, "not an integer: '" + std::string(v) + "'");
  }
}

inline std::uint64_t parse_u64(std::string_view v, const std::string& source,
                               int line) {
  try {
    std::size_t pos = 0;
    const unsigned long long i = std::stoull(std::string(v), &pos);
    if (pos != v.size()) {
      config_fail(source, line, "trailing characters in integer");
    }
    return i;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    config_fail(source, line, "not an unsigned integer: '" + std::string(v) +
                                  "'");
  }
}

inline bool parse_bool(std::string_view v, const std::string& source,
                       int line) {
  if (v == "true") {
    return true;
  }
  if (v == "false") {
    return false;
  }
  config_fail(source, line, "expected true/false, got '" + std::string(v) +
                                "'");
}

inline std::pair<double, double> parse_range(std::string_view v,
                                             const std::string& source,
                                             int line) {
  const auto comma = v.find(',');
  if (comma == std::string_view::npos) {
    config_fail(source, line, "range needs two comma-separated values");
  }
  return {parse_double(trim(v.substr(0, comma)), source, line),
          parse_double(trim(v.substr(comma + 1)), source, line)};
}

inline void apply_key(Config& cfg, std::string_view key, std::string_view val,
                      const std::string& source, int line) {
  if (key == "num_channels") {
    cfg.num_channels = static_cast<int>(parse_int(val, source, line));
  } else if (key == "bandwidth_mhz") {
    cfg.bandwidth_mhz = parse_double(val, source, line);
  } else if (key == "trans_power_mw") {
    cfg.trans_power_mw = parse_double(val, source, line);
  } else if (key == "idle_power_mw") {
    cfg.idle_power_mw = parse_double(val, source, line);
  } else if (key == "circuit_power_mw") {
    cfg.circuit_power_mw = parse_double(val, source, line);
  } else if (key == "switch_power_mw") {
    cfg.switch_power_mw = parse_double(val, source, line);
  } else if (key == "switch_delay_us_per_mhz") {
    cfg.switch_delay_us_per_mhz = parse_double(val, source, line);
  } else if (key == "sim_time_s") {
    cfg.sim_time_s = parse_double(val, source, line);
  } else if (key == "frame_s") {
    cfg.frame_s = parse_double(val, source, line);
  } else if (key == "subframe_s") {
    cfg.subframe_s = parse_double(val, source, line);
  } else if (key == "su_count") {
    cfg.su_count = static_cast<int>(parse_int(val, source, line));
  } else if (key == "su_arrival") {
    if (val == "batch") {
      cfg.su_arrival = SuArrival::kBatch;
    } else if (val == "interval") {
      cfg.su_arrival = SuArrival::kInterval;
    } else {
      config_fail(source, line, "su_arrival must be batch or interval");
    }
  } else if (key == "su_arrival_gap_ms") {
    cfg.su_arrival_gap_ms = parse_double(val, source, line);
  } else if (key == "transient_offset_ms") {
    cfg.transient_offset_ms = parse_double(val, source, line);
  } else if (key == "pu_off_mean_range_s") {
    cfg.pu_off_mean_range_s = parse_range(val, source, line);
  } else if (key == "pu_on_mean_range_s") {
    cfg.pu_on_mean_range_s = parse_range(val, source, line);
  } else if (key == "rounds") {
    cfg.rounds = static_cast<int>(parse_int(val, source, line));
  } else if (key == "seed") {
    cfg.seed = parse_u64(val, source, line);
  } else if (key == "eq1_mode") {
    if (val == "additive") {
      cfg.eq1_mode = Eq1Mode::kAdditive;
    } else if (val == "literal") {
      cfg.eq1_mode = Eq1Mode::kLiteral;
    } else {
      config_fail(source, line, "eq1_mode must be additive or literal");
    }
  } else if (key == "gate_on_connection") {
    cfg.gate_on_connection = parse_bool(val, source, line);
  } else if (key == "tcp_port") {
    cfg.tcp_port = static_cast<int>(parse_int(val, source, line));
  } else if (key == "selection_metric") {
    cfg.selection_metric = std::string(val);
  } else if (key == "timestamp_prefix") {
    cfg.timestamp_prefix = parse_bool(val, source, line);
  } else if (key == "model_all_pu") {
    cfg.model_all_pu = parse_bool(val, source, line);
  } else {
    config_fail(source, line, "unknown key: '" + std::string(key) + "'");
  }
}

}  // namespace detail

// Parses `key = value` text onto a base config (defaults unless the caller
// pre-seeded something, e.g. an environment seed).
inline Config parse_config_text(std::string_view text,
                                const std::string& source_name,
                                Config base = Config{}) {
  Config cfg = std::move(base);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      detail::config_fail(source_name, line_no, "expected 'key = value'");
    }
    const std::string_view key = detail::trim(stripped.substr(0, eq));
    const std::string_view val = detail::trim(stripped.substr(eq + 1));
    if (key.empty()) {
      detail::config_fail(source_name, line_no, "empty key");
    }
    detail::apply_key(cfg, key, val, source_name, line_no);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return cfg;
}

inline Config parse_config(const std::string& path, Config base = Config{}) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path, std::move(base));
}

// Command-line flags outrank the config file, which outranks the CRSIM_SEED
// environment variable (applied to the base config before parsing).
struct FlagOverrides {
  std::optional<int> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<Eq1Mode> eq1_mode;
  bool gate_on_connection = false;
};

inline void apply_flag_overrides(Config& cfg, const FlagOverrides& flags) {
  if (flags.rounds) {
    cfg.rounds = *flags.rounds;
  }
  if (flags.seed) {
    cfg.seed = *flags.seed;
  }
  if (flags.eq1_mode) {
    cfg.eq1_mode = *flags.eq1_mode;
  }
  if (flags.gate_on_connection) {
    cfg.gate_on_connection = true;
  }
  cfg.validate();
}

inline std::optional<std::uint64_t> seed_from_env_string(const char* raw) {
  if (raw == nullptr || *raw == '\0') {
    return std::nullopt;
  }
  try {
    std::size_t pos = 0;
    const auto value = std::stoull(raw, &pos);
    if (pos != std::string(raw).size()) {
      return std::nullopt;
    }
    return value;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace crsim
