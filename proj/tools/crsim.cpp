// crsim: cognitive-radio network simulator CLI.
//
//   crsim run --config <path> [--rounds N] [--seed S] [--out results.csv]
//             [--events events.log] [--listen <port>] [--gate]
//             [--eq1 additive|literal]
//
// Flag precedence: flags > config file > CRSIM_SEED env var > defaults.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crsim/crsim.hpp"

int main(int argc, char** argv) {
  CLI::App app{"IEEE 802.22 cognitive-radio network simulator"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a multi-round experiment");
  std::string config_path;
  std::string out_path = "results.csv";
  std::string events_path;
  int rounds_flag = -1;
  std::string seed_flag;
  std::string eq1_flag;
  int listen_port = -1;
  bool gate = false;

  run_cmd->add_option("--config", config_path,
                      "config file (key = value lines)");
  run_cmd->add_option("--rounds", rounds_flag, "number of simulation rounds");
  run_cmd->add_option("--seed", seed_flag, "master seed");
  run_cmd->add_option("--out", out_path, "per-round CSV output path")
      ->capture_default_str();
  run_cmd->add_option("--events", events_path, "event log file path");
  run_cmd->add_option("--listen", listen_port,
                      "serve the event stream on this TCP port");
  run_cmd->add_flag("--gate", gate,
                    "wait for an event client before starting");
  run_cmd->add_option("--eq1", eq1_flag,
                      "energy formula reading: additive|literal")
      ->check(CLI::IsMember({"additive", "literal"}));

  CLI11_PARSE(app, argc, argv);

  try {
    crsim::Config base;
    if (const auto seed =
            crsim::seed_from_env_string(std::getenv("CRSIM_SEED"))) {
      base.seed = *seed;
    }
    crsim::Config cfg = config_path.empty()
                            ? base
                            : crsim::parse_config(config_path, base);
    crsim::FlagOverrides flags;
    if (rounds_flag > 0) {
      flags.rounds = rounds_flag;
    }
    if (!seed_flag.empty()) {
      flags.seed = std::stoull(seed_flag);
    }
    if (eq1_flag == "additive") {
      flags.eq1_mode = crsim::Eq1Mode::kAdditive;
    } else if (eq1_flag == "literal") {
      flags.eq1_mode = crsim::Eq1Mode::kLiteral;
    }
    flags.gate_on_connection = gate;
    crsim::apply_flag_overrides(cfg, flags);

    crsim::EventPipeline::Options sink_options;
    if (!events_path.empty()) {
      sink_options.file_path = events_path;
    }
    if (listen_port >= 0) {
      sink_options.tcp_port = static_cast<std::uint16_t>(listen_port);
    } else if (cfg.gate_on_connection) {
      sink_options.tcp_port = static_cast<std::uint16_t>(cfg.tcp_port);
    }
    sink_options.gate_on_connection = cfg.gate_on_connection;
    sink_options.timestamp_prefix = cfg.timestamp_prefix;

    crsim::EventPipeline pipeline(sink_options);
    if (sink_options.tcp_port && cfg.gate_on_connection) {
      std::fprintf(stderr, "waiting for an event client on port %u...\n",
                   static_cast<unsigned>(pipeline.tcp()->port()));
    }
    pipeline.attach_and_gate();

    const auto result = crsim::run_experiment(
        cfg, &pipeline.emitter(), [&] { return pipeline.client_connected(); });
    pipeline.flush();
    crsim::write_csv(out_path, result);
    std::cout << crsim::summary_text(result) << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
