#pragma once

// Experiment recipes behind the command-line tool: configuration parsing,
// the five experiment runners and their CSV/JSON writers.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpm/keyrate.h"
#include "dpm/laser.h"
#include "dpm/optics.h"
#include "dpm/protocol.h"
#include "dpm/source.h"
#include "dpm/stats.h"

namespace dpm::experiments {

enum class Experiment { kPhaseVoltage, kRandomization, kBb84Sweep, kDpsSweep, kStability };

std::string_view to_string(Experiment e);
// ConfigError on unknown names.
Experiment experiment_from_string(std::string_view name);

enum class McMethod { kEvent, kPipeline };

struct PhaseVoltageSettings {
  std::vector<double> voltages;
  bool physical = true;
  double bias = 1.5;           // drive units, multiples of threshold by default
  double dt = 2e-13;           // s
  double settle = 1e-9;        // s before the perturbation
  double tail = 2e-9;          // s after the perturbation
  double calibration_step = 0.01;  // drive units used to measure the phase slope
  bool noise = false;
};

struct RandomizationSettings {
  double symbol_phase = 0.0;
  std::size_t histogram_bins = 50;
};

struct SweepSettings {
  McMethod method = McMethod::kEvent;
  // Monte Carlo slots per loss point are raised until this many sifted bits
  // are expected.
  std::uint64_t min_sifted = 1'000'000;
};

struct StabilityConfig {
  double duration = 86400.0;         // s
  double integration_time = 1.0;     // s
  double sifted_rate_bps = 23500.0;  // from sigma = sqrt(E (1 - E) / n) at sigma = 0.10 %
  double true_qber = 0.0241;
  std::size_t histogram_bins = 60;

  void validate() const;
  std::uint64_t bins() const;
  std::uint64_t sifted_per_bin() const;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kBb84Sweep;
  source::SourceConfig source;
  bool randomize_blocks = true;
  optics::ChannelParams channel;
  optics::InterferometerParams mzi;
  optics::DetectorParams detector;
  laser::LaserParams laser;
  double decoy_nu = 0.1;
  double f_ec = 1.16;
  std::vector<double> losses;
  std::uint64_t trials = 10'000'000;
  std::uint64_t rng_seed = 1;
  std::string output_path = "out";
  PhaseVoltageSettings phase_voltage;
  RandomizationSettings randomization;
  SweepSettings sweep;
  StabilityConfig stability;

  // ConfigError naming the first offending field.
  void validate() const;

  protocol::LinkSetup link_setup() const;
  keyrate::KeyRateSettings keyrate_settings() const;
};

ExperimentConfig default_config(Experiment experiment);

// Flat "group.key = value" text, '#' comments, unknown keys rejected. The
// `experiment` key selects the defaults; when absent, `fallback` is used.
ExperimentConfig parse_config(std::istream& in,
                              std::optional<Experiment> fallback = std::nullopt);

// Every key with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> resolved_entries(const ExperimentConfig& config);

// ---- phase vs voltage ------------------------------------------------------

struct PhaseVoltageRow {
  double voltage = 0.0;
  double encoder_phase = 0.0;
  double chirp_hz = 0.0;
  std::optional<double> physical_phase;
};

struct PhaseVoltageResult {
  std::vector<PhaseVoltageRow> rows;
  // Physical mode only: drive units per volt giving pi at the halfwave voltage.
  std::optional<double> drive_per_volt;
};

PhaseVoltageResult run_phase_voltage(const ExperimentConfig& config);

// Phase step of the laser model for a drive perturbation of `delta_drive`
// lasting source.perturbation_duration, relative to the unperturbed run.
double physical_phase_step(const ExperimentConfig& config, double delta_drive);

// ---- randomization ---------------------------------------------------------

struct RandomizationResult {
  // port0 share of each interference slot, normalized by the visibility so
  // that a uniform phase gives the arcsine law on (0, 1).
  std::vector<double> intra_block;
  std::vector<double> cross_block;
  // port0 mean photon numbers of intra-block slots.
  double intra_std_over_mean = 0.0;
  stats::TestResult cross_ks;
  stats::TestResult intra_ks;
  stats::Histogram intra_histogram;
  stats::Histogram cross_histogram;
};

RandomizationResult run_randomization(const ExperimentConfig& config);

// ---- loss sweeps -----------------------------------------------------------

struct SweepRow {
  keyrate::RatePoint analytic;
  protocol::GainQber analytic_gain_qber;
  protocol::LinkStats mc;
  std::uint64_t slots = 0;
  std::uint64_t seed = 0;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& config);

// Slots needed so that `min_sifted` sifted bits are expected, at least
// `trials`, rounded up to the protocol's chunk granularity.
std::uint64_t sweep_slots(const ExperimentConfig& config, double loss_db);

// ---- stability -------------------------------------------------------------

struct StabilityResult {
  std::vector<double> qber;  // one per integration bin
  double mean = 0.0;
  double stddev = 0.0;
  double model_stddev = 0.0;  // sqrt(E (1 - E) / n)
  stats::Histogram histogram;
  std::vector<double> model_counts;  // normal approximation per histogram bin
};

StabilityResult run_stability(const StabilityConfig& config, std::uint64_t rng_seed);

// ---- output ----------------------------------------------------------------

// Writes the experiment's files into `dir` (created if needed) and returns
// their paths. Each file embeds the resolved configuration.
std::vector<std::filesystem::path> run_and_write(const ExperimentConfig& config,
                                                 const std::filesystem::path& dir);

void write_phase_voltage(std::ostream& csv, const ExperimentConfig& config,
                         const PhaseVoltageResult& result);
void write_sweep_csv(std::ostream& csv, const ExperimentConfig& config,
                     const std::vector<SweepRow>& rows);

}  // namespace dpm::experiments
