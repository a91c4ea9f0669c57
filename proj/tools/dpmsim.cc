// Command-line front end: one subcommand per experiment.
//
//   dpmsim <experiment> [--config PATH] [--seed N] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical divergence.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dpm/errors.h"
#include "dpm/experiments.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

int run(dpm::experiments::Experiment experiment, const std::string& config_path,
        std::optional<std::uint64_t> seed, const std::string& out) {
  using namespace dpm::experiments;
  ExperimentConfig config;
  if (config_path.empty()) {
    config = default_config(experiment);
  } else {
    std::ifstream in(config_path);
    if (!in) throw dpm::ConfigError("--config", "cannot read " + config_path);
    config = parse_config(in, experiment);
  }
  if (seed) config.rng_seed = *seed;
  if (!out.empty()) config.output_path = out;
  config.validate();
  for (const auto& path : run_and_write(config, config.output_path)) {
    std::cout << path.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directly phase-modulated source and QKD link simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<dpm::experiments::Experiment> chosen;

  for (auto e : {dpm::experiments::Experiment::kPhaseVoltage,
                 dpm::experiments::Experiment::kRandomization,
                 dpm::experiments::Experiment::kBb84Sweep,
                 dpm::experiments::Experiment::kDpsSweep,
                 dpm::experiments::Experiment::kStability}) {
    auto* sub = app.add_subcommand(std::string(dpm::experiments::to_string(e)));
    sub->add_option("--config", config_path, "Key-value configuration file");
    sub->add_option("--seed", seed, "Override rng_seed");
    sub->add_option("--out", out, "Output directory (overrides output_path)");
    sub->callback([&chosen, e] { chosen = e; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    return run(*chosen, config_path, seed, out);
  } catch (const dpm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dpm::IntegrationDiverged& e) {
    std::cerr << "numerical divergence: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const dpm::PreconditionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
