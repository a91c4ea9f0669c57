#pragma once

// Fiber/attenuator channel, asymmetric Mach-Zehnder decoder and gated
// threshold single-photon detectors.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dpm/source.h"

namespace dpm::optics {

struct ChannelParams {
  double loss_db = 0.0;
  double loss_per_km = 0.2;  // dB/km

  void validate() const;
  // Channel of `length_km` fiber at `loss_per_km`.
  static ChannelParams fiber(double length_km, double loss_per_km = 0.2);
  double transmittance() const;
};

struct InterferometerParams {
  double delay = 500e-12;  // s
  double internal_phase = 0.0;
  double insertion_loss_db = 3.0;
  double visibility = 1.0;

  void validate() const;
  double transmittance() const;
};

struct DetectorParams {
  double efficiency = 0.14;
  double dark_rate = 150.0;      // Hz
  double gate_width = 0.25e-9;   // s
  double gate_period = 0.5e-9;   // s

  void validate() const;
  double dark_probability() const { return dark_rate * gate_width; }
};

source::PulseTrain attenuate(const source::PulseTrain& train, const ChannelParams& channel);

struct PortIntensity {
  std::int64_t slot = 0;
  double port0 = 0.0;  // mean photon number
  double port1 = 0.0;
};

// Port mean photon numbers for two interfering pulses with phase difference
// `delta_phase` (already including the interferometer's internal phase).
PortIntensity fringe(double mean_a, double mean_b, double delta_phase,
                     const InterferometerParams& mzi);

// Number of slots spanned by the interferometer delay.
int delay_slots(const InterferometerParams& mzi, double slot_period);

// One output per slot i whose predecessor i - k is in the train, where k is
// the delay in slots.
std::vector<PortIntensity> interfere(const source::PulseTrain& train,
                                     const InterferometerParams& mzi);

// Probability that a threshold detector fires in one gate.
double click_probability(double mean_photons, const DetectorParams& det);

struct ClickRecord {
  std::vector<std::int64_t> slots;
  std::vector<std::uint8_t> port0;
  std::vector<std::uint8_t> port1;
  std::uint64_t total_port0 = 0;
  std::uint64_t total_port1 = 0;
  std::uint64_t total_double = 0;

  std::size_t size() const { return slots.size(); }
  // Recomputes totals from the per-slot flags and compares.
  bool totals_consistent() const;
};

// Each port fires independently with click_probability of its mean photons.
ClickRecord detect(const std::vector<PortIntensity>& intensities, const DetectorParams& det,
                   std::uint64_t rng_seed);

// CSV with header slot,port0,port1.
void write_clicks_csv(std::ostream& out, const ClickRecord& clicks);

}  // namespace dpm::optics
