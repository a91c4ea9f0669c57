#include "dpm/source.h"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dpm/errors.h"
#include "dpm/io.h"
#include "dpm/random.h"
#include "dpm/stats.h"

namespace dpm::source {

void SourceConfig::validate() const {
  require(clock_rate > 0.0 && std::isfinite(clock_rate), "source.clock_rate: must be positive");
  require(pulse_width > 0.0 && pulse_width < 1.0 / clock_rate,
          "source.pulse_width: must be positive and shorter than the slot period");
  require(wavelength > 0.0, "source.wavelength: must be positive");
  require(halfwave_voltage > 0.0 && std::isfinite(halfwave_voltage),
          "source.halfwave_voltage: must be positive");
  require(perturbation_duration > 0.0, "source.perturbation_duration: must be positive");
  require(block_length >= 1, "source.block_length: must be at least 1");
  require(mean_photon_number >= 0.0 && std::isfinite(mean_photon_number),
          "source.mean_photon_number: must be non-negative");
}

double chirp_to_phase(double delta_nu, double t_m) {
  require(t_m > 0.0, "chirp_to_phase: perturbation duration must be positive");
  return 2.0 * std::numbers::pi * delta_nu * t_m;
}

double voltage_to_chirp(double voltage, const SourceConfig& config) {
  return voltage / (2.0 * config.halfwave_voltage * config.perturbation_duration);
}

double voltage_to_phase(double voltage, const SourceConfig& config) {
  return chirp_to_phase(voltage_to_chirp(voltage, config), config.perturbation_duration);
}

PulseTrain emit_train(const SourceConfig& config, std::span<const double> phase_symbols,
                      bool randomize_blocks, std::uint64_t rng_seed, std::int64_t first_slot) {
  config.validate();
  require(!phase_symbols.empty(), "emit_train: empty symbol sequence");
  require(first_slot >= 0 && first_slot % config.block_length == 0,
          "emit_train: first slot must fall on a block boundary");

  PulseTrain train{{}, config};
  train.pulses.reserve(phase_symbols.size());
  Rng rng(rng_seed);
  double global = 0.0;
  for (std::size_t i = 0; i < phase_symbols.size(); ++i) {
    const std::int64_t slot = first_slot + static_cast<std::int64_t>(i);
    const std::int64_t block = slot / config.block_length;
    if (slot % config.block_length == 0) {
      global = randomize_blocks ? 2.0 * std::numbers::pi * uniform01(rng) : 0.0;
    }
    train.pulses.push_back({slot, stats::wrap_2pi(phase_symbols[i] + global),
                            config.mean_photon_number, block, global});
  }
  return train;
}

double seeding_visibility(double injection_power, const VisibilityCurve& curve) {
  require(injection_power >= 0.0, "seeding_visibility: injection power must be non-negative");
  require(curve.v_max >= 0.0 && curve.v_max <= 1.0 && curve.p0_watts > 0.0,
          "seeding_visibility: invalid calibration record");
  return curve.v_max * -std::expm1(-injection_power / curve.p0_watts);
}

VisibilityCurve parse_visibility_curve(std::istream& in) {
  VisibilityCurve curve;
  bool have_v = false;
  bool have_p = false;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw ConfigError("visibility_curve", "malformed line '" + line + "'");
      }
      continue;
    }
    std::istringstream key_stream(line.substr(0, eq));
    std::string key;
    key_stream >> key;
    std::istringstream value_stream(line.substr(eq + 1));
    value_stream.imbue(std::locale::classic());
    double value = 0.0;
    if (!(value_stream >> value)) {
      throw ConfigError(key, "not a number");
    }
    if (key == "v_max") {
      curve.v_max = value;
      have_v = true;
    } else if (key == "p0_watts") {
      curve.p0_watts = value;
      have_p = true;
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  if (!have_v) throw ConfigError("v_max", "missing");
  if (!have_p) throw ConfigError("p0_watts", "missing");
  if (!(curve.v_max >= 0.0 && curve.v_max <= 1.0)) throw ConfigError("v_max", "outside [0, 1]");
  if (!(curve.p0_watts > 0.0)) throw ConfigError("p0_watts", "must be positive");
  return curve;
}

void write_visibility_curve(std::ostream& out, const VisibilityCurve& curve) {
  out << "v_max = " << io::format_double(curve.v_max) << '\n'
      << "p0_watts = " << io::format_double(curve.p0_watts) << '\n';
}

void write_train_csv(std::ostream& out, const PulseTrain& train) {
  io::CsvWriter csv(out);
  csv.field("slot").field("phase_rad").field("mean_photons").field("block_id").end_row();
  for (const auto& p : train.pulses) {
    csv.field(p.slot_index).field(p.phase).field(p.mean_photons).field(p.block_id);
    csv.end_row();
  }
}

}  // namespace dpm::source
