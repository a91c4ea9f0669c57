#include "dpm/optics.h"

#include <cmath>
#include <ostream>

#include "dpm/errors.h"
#include "dpm/io.h"
#include "dpm/random.h"

namespace dpm::optics {

namespace {

double db_to_transmittance(double db) { return std::pow(10.0, -db / 10.0); }

}  // namespace

void ChannelParams::validate() const {
  require(loss_db >= 0.0 && std::isfinite(loss_db), "channel.loss_db: must be non-negative");
  require(loss_per_km >= 0.0 && std::isfinite(loss_per_km),
          "channel.loss_per_km: must be non-negative");
}

ChannelParams ChannelParams::fiber(double length_km, double loss_per_km) {
  require(length_km >= 0.0, "channel: fiber length must be non-negative");
  ChannelParams c{length_km * loss_per_km, loss_per_km};
  c.validate();
  return c;
}

double ChannelParams::transmittance() const { return db_to_transmittance(loss_db); }

void InterferometerParams::validate() const {
  require(delay > 0.0 && std::isfinite(delay), "mzi.delay: must be positive");
  require(std::isfinite(internal_phase), "mzi.internal_phase: must be finite");
  require(insertion_loss_db >= 0.0, "mzi.insertion_loss_db: must be non-negative");
  require(visibility >= 0.0 && visibility <= 1.0, "mzi.visibility: must lie in [0, 1]");
}

double InterferometerParams::transmittance() const {
  return db_to_transmittance(insertion_loss_db);
}

void DetectorParams::validate() const {
  require(efficiency >= 0.0 && efficiency <= 1.0, "detector.efficiency: must lie in [0, 1]");
  require(dark_rate >= 0.0, "detector.dark_rate: must be non-negative");
  require(gate_width > 0.0, "detector.gate_width: must be positive");
  require(gate_period >= gate_width, "detector.gate_width: must not exceed gate_period");
  require(dark_probability() <= 1.0, "detector.dark_rate: dark probability per gate exceeds 1");
}

source::PulseTrain attenuate(const source::PulseTrain& train, const ChannelParams& channel) {
  channel.validate();
  const double t = channel.transmittance();
  source::PulseTrain out = train;
  for (auto& p : out.pulses) p.mean_photons *= t;
  return out;
}

PortIntensity fringe(double mean_a, double mean_b, double delta_phase,
                     const InterferometerParams& mzi) {
  const double total = mzi.transmittance() * 0.5 * (mean_a + mean_b);
  const double c = mzi.visibility * std::cos(delta_phase);
  return {0, 0.5 * total * (1.0 + c), 0.5 * total * (1.0 - c)};
}

int delay_slots(const InterferometerParams& mzi, double slot_period) {
  require(slot_period > 0.0, "interfere: slot period must be positive");
  const double k = mzi.delay / slot_period;
  const double rounded = std::round(k);
  if (rounded < 1.0 || std::abs(k - rounded) > 1e-6) {
    throw PreconditionError("interfere: delay must be a positive whole number of slots");
  }
  return static_cast<int>(rounded);
}

std::vector<PortIntensity> interfere(const source::PulseTrain& train,
                                     const InterferometerParams& mzi) {
  mzi.validate();
  const int k = delay_slots(mzi, train.config.slot_period());
  std::vector<PortIntensity> out;
  const auto& pulses = train.pulses;
  if (pulses.size() > static_cast<std::size_t>(k)) out.reserve(pulses.size() - k);
  for (std::size_t i = static_cast<std::size_t>(k); i < pulses.size(); ++i) {
    const auto& late = pulses[i];
    const auto& early = pulses[i - k];
    if (late.slot_index - early.slot_index != k) continue;
    PortIntensity p = fringe(late.mean_photons, early.mean_photons,
                             late.phase - early.phase + mzi.internal_phase, mzi);
    p.slot = late.slot_index;
    out.push_back(p);
  }
  return out;
}

double click_probability(double mean_photons, const DetectorParams& det) {
  require(mean_photons >= 0.0, "click_probability: mean photon number must be non-negative");
  // 1 - (1 - p_dark) exp(-mu eta), written to keep precision for tiny mu eta.
  const double p_dark = det.dark_probability();
  const double no_signal = std::exp(-mean_photons * det.efficiency);
  return p_dark * no_signal - std::expm1(-mean_photons * det.efficiency);
}

bool ClickRecord::totals_consistent() const {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t both = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    a += port0[i];
    b += port1[i];
    both += port0[i] & port1[i];
  }
  return port0.size() == slots.size() && port1.size() == slots.size() && a == total_port0 &&
         b == total_port1 && both == total_double;
}

ClickRecord detect(const std::vector<PortIntensity>& intensities, const DetectorParams& det,
                   std::uint64_t rng_seed) {
  det.validate();
  ClickRecord rec;
  rec.slots.reserve(intensities.size());
  rec.port0.reserve(intensities.size());
  rec.port1.reserve(intensities.size());
  Rng rng(rng_seed);
  for (const auto& s : intensities) {
    const bool c0 = uniform01(rng) < click_probability(s.port0, det);
    const bool c1 = uniform01(rng) < click_probability(s.port1, det);
    rec.slots.push_back(s.slot);
    rec.port0.push_back(c0);
    rec.port1.push_back(c1);
    rec.total_port0 += c0;
    rec.total_port1 += c1;
    rec.total_double += c0 && c1;
  }
  return rec;
}

void write_clicks_csv(std::ostream& out, const ClickRecord& clicks) {
  io::CsvWriter csv(out);
  csv.field("slot").field("port0").field("port1").end_row();
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    csv.field(clicks.slots[i]).field(static_cast<bool>(clicks.port0[i]))
        .field(static_cast<bool>(clicks.port1[i]));
    csv.end_row();
  }
}

}  // namespace dpm::optics
