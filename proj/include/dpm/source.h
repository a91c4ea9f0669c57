#pragma once

// Phenomenological model of the two-laser directly phase-modulated source:
// drive voltage -> chirp -> phase step, and the emitted pulse train with
// per-block global phase randomization.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dpm::source {

struct SourceConfig {
  double clock_rate = 2e9;                // Hz
  double pulse_width = 70e-12;            // s, metadata only
  double wavelength = 1551e-9;            // m
  double halfwave_voltage = 0.35;         // V
  double perturbation_duration = 250e-12; // s
  int block_length = 2;                   // pulses per coherence block
  double mean_photon_number = 0.25;       // per pulse, before attenuation

  void validate() const;
  double slot_period() const { return 1.0 / clock_rate; }
};

struct OpticalPulse {
  std::int64_t slot_index = 0;
  double phase = 0.0;  // [0, 2 pi)
  double mean_photons = 0.0;
  std::int64_t block_id = 0;
  double global_phase = 0.0;
};

struct PulseTrain {
  std::vector<OpticalPulse> pulses;
  SourceConfig config;
};

// Phase step accumulated by a frequency offset held for t_m (signed, unwrapped).
double chirp_to_phase(double delta_nu, double t_m);

// Chirp produced by a drive voltage. Linear, with the slope fixed so that the
// halfwave voltage over the perturbation duration gives a phase step of pi.
double voltage_to_chirp(double voltage, const SourceConfig& config);

// Convenience composition of voltage_to_chirp and chirp_to_phase.
double voltage_to_phase(double voltage, const SourceConfig& config);

// Emits one pulse per symbol, starting at slot `first_slot`. Blocks are
// consecutive runs of block_length pulses counted from slot 0; a chunk that
// starts mid-block is rejected so that chunked emission stays consistent.
PulseTrain emit_train(const SourceConfig& config, std::span<const double> phase_symbols,
                      bool randomize_blocks, std::uint64_t rng_seed,
                      std::int64_t first_slot = 0);

struct VisibilityCurve {
  double v_max = 0.9906;
  double p0_watts = 10e-6;
};

// Alternative saturation value for a narrow-linewidth (150 kHz) master laser.
inline constexpr double kNarrowLinewidthVisibility = 0.9992;

// V(P) = v_max (1 - exp(-P / p0)).
double seeding_visibility(double injection_power, const VisibilityCurve& curve = {});

// Key-value text with keys v_max and p0_watts ("key = value", '#' comments).
VisibilityCurve parse_visibility_curve(std::istream& in);
void write_visibility_curve(std::ostream& out, const VisibilityCurve& curve);

// CSV with header slot,phase_rad,mean_photons,block_id.
void write_train_csv(std::ostream& out, const PulseTrain& train);

}  // namespace dpm::source
