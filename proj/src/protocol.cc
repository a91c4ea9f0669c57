#include "dpm/protocol.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "json.hpp"

#include "dpm/errors.h"
#include "dpm/random.h"

namespace dpm::protocol {

namespace {

constexpr double kPi = std::numbers::pi;
// Pulses per Monte Carlo chunk; a multiple of 2 and of kDpsBlockLength.
constexpr std::uint64_t kChunkPulses = 1u << 16;

void finish(SiftResult& r) {
  r.qber = r.sifted_count > 0
               ? static_cast<double>(r.error_count) / static_cast<double>(r.sifted_count)
               : 0.0;
  r.sifted_rate = r.duration > 0.0 ? static_cast<double>(r.sifted_count) / r.duration : 0.0;
}

// Bit read from a click pair; false when neither port fired.
bool read_bit(bool c0, bool c1, Rng& tie, std::uint8_t& bit) {
  if (c0 && c1) {
    bit = static_cast<std::uint8_t>(tie() >> 63);
  } else if (c0 || c1) {
    bit = c1 ? 1 : 0;
  } else {
    return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Protocol p) { return p == Protocol::kBb84 ? "bb84" : "dps"; }

Protocol protocol_from_string(std::string_view name) {
  if (name == "bb84") return Protocol::kBb84;
  if (name == "dps") return Protocol::kDps;
  throw PreconditionError("unknown protocol '" + std::string(name) + "'");
}

double Bb84Symbol::phase_delta() const {
  return (basis == Basis::kX ? 0.5 * kPi : 0.0) + (bit != 0 ? kPi : 0.0);
}

double DpsSymbol::phase_delta() const { return bit != 0 ? kPi : 0.0; }

double receiver_phase(Basis basis) { return basis == Basis::kX ? -0.5 * kPi : 0.0; }

std::vector<Bb84Symbol> generate_bb84_symbols(std::size_t count, std::uint64_t rng_seed) {
  require(count >= 1, "generate_symbols: count must be at least 1");
  Rng rng(rng_seed);
  std::vector<Bb84Symbol> out(count);
  for (auto& s : out) {
    const auto r = rng();
    s.basis = static_cast<Basis>(r >> 63);
    s.bit = static_cast<std::uint8_t>((r >> 62) & 1u);
  }
  return out;
}

std::vector<DpsSymbol> generate_dps_symbols(std::size_t count, std::uint64_t rng_seed) {
  require(count >= 1, "generate_symbols: count must be at least 1");
  Rng rng(rng_seed);
  std::vector<DpsSymbol> out(count);
  for (auto& s : out) s.bit = static_cast<std::uint8_t>(rng() >> 63);
  return out;
}

std::vector<Basis> generate_basis_choices(std::size_t count, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  std::vector<Basis> out(count);
  for (auto& b : out) b = static_cast<Basis>(rng() >> 63);
  return out;
}

std::vector<double> bb84_encode(std::span<const Bb84Symbol> symbols,
                                const source::SourceConfig& config) {
  require(config.block_length == 2, "bb84_encode: source block_length must be 2");
  std::vector<double> phases;
  phases.reserve(2 * symbols.size());
  for (const auto& s : symbols) {
    phases.push_back(0.0);
    phases.push_back(s.phase_delta());
  }
  return phases;
}

std::vector<double> dps_encode(std::span<const DpsSymbol> symbols) {
  std::vector<double> phases;
  phases.reserve(symbols.size());
  double phase = 0.0;
  for (const auto& s : symbols) {
    phase = std::fmod(phase + s.phase_delta(), 2.0 * kPi);
    phases.push_back(phase);
  }
  return phases;
}

optics::ClickRecord bb84_receive(const source::PulseTrain& train, std::span<const Basis> bob_bases,
                                 const optics::InterferometerParams& mzi,
                                 const optics::DetectorParams& det, std::uint64_t rng_seed) {
  mzi.validate();
  require(optics::delay_slots(mzi, train.config.slot_period()) == 1,
          "bb84_receive: interferometer delay must equal one slot");
  require(!train.pulses.empty() && train.pulses.front().slot_index % 2 == 0,
          "bb84_receive: train must start on a pair boundary");
  require(bob_bases.size() * 2 == train.pulses.size(),
          "bb84_receive: one basis choice per pulse pair required");
  std::vector<optics::PortIntensity> intensities;
  intensities.reserve(train.pulses.size());
  for (std::size_t i = 1; i < train.pulses.size(); ++i) {
    const auto& late = train.pulses[i];
    const auto& early = train.pulses[i - 1];
    optics::InterferometerParams arm = mzi;
    arm.internal_phase = mzi.internal_phase + receiver_phase(bob_bases[i / 2]);
    optics::PortIntensity p =
        optics::fringe(late.mean_photons, early.mean_photons,
                       late.phase - early.phase + arm.internal_phase, arm);
    p.slot = late.slot_index;
    intensities.push_back(p);
  }
  return optics::detect(intensities, det, rng_seed);
}

void SiftResult::merge(const SiftResult& other) {
  sifted_count += other.sifted_count;
  error_count += other.error_count;
  duration += other.duration;
  finish(*this);
}

SiftResult bb84_sift(std::span<const Bb84Symbol> symbols, std::span<const Basis> bob_bases,
                     const optics::ClickRecord& clicks, double clock_rate,
                     std::uint64_t tie_seed, std::int64_t first_slot) {
  require(symbols.size() == bob_bases.size(),
          "bb84_sift: symbol and basis sequences differ in length");
  require(clicks.port0.size() == clicks.size() && clicks.port1.size() == clicks.size(),
          "bb84_sift: malformed click record");
  require(clock_rate > 0.0, "bb84_sift: clock rate must be positive");
  require(first_slot % 2 == 0, "bb84_sift: first slot must start a pair");
  SiftResult r;
  r.duration = 2.0 * static_cast<double>(symbols.size()) / clock_rate;
  Rng tie(tie_seed);
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const std::int64_t rel = clicks.slots[i] - first_slot;
    if (rel < 0 || rel % 2 != 1) continue;  // satellite slot or outside this run
    const auto pair = static_cast<std::size_t>(rel / 2);
    require(pair < symbols.size(), "bb84_sift: click slot beyond the symbol sequence");
    if (bob_bases[pair] != symbols[pair].basis) continue;
    std::uint8_t bit = 0;
    if (!read_bit(clicks.port0[i] != 0, clicks.port1[i] != 0, tie, bit)) continue;
    ++r.sifted_count;
    if (bit != symbols[pair].bit) ++r.error_count;
  }
  finish(r);
  return r;
}

SiftResult dps_sift(std::span<const DpsSymbol> symbols, const optics::ClickRecord& clicks,
                    int block_length, double clock_rate, std::uint64_t tie_seed,
                    std::int64_t first_slot) {
  require(block_length >= 2, "dps_sift: block length must be at least 2");
  require(clock_rate > 0.0, "dps_sift: clock rate must be positive");
  SiftResult r;
  r.duration = static_cast<double>(symbols.size()) / clock_rate;
  Rng tie(tie_seed);
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const std::int64_t slot = clicks.slots[i];
    if (slot % block_length == 0) continue;  // predecessor in another block
    const std::int64_t rel = slot - first_slot;
    if (rel < 1 || rel >= static_cast<std::int64_t>(symbols.size())) continue;
    std::uint8_t bit = 0;
    if (!read_bit(clicks.port0[i] != 0, clicks.port1[i] != 0, tie, bit)) continue;
    ++r.sifted_count;
    if (bit != symbols[static_cast<std::size_t>(rel)].bit) ++r.error_count;
  }
  finish(r);
  return r;
}

LinkSetup default_setup(Protocol protocol) {
  LinkSetup s;
  s.protocol = protocol;
  if (protocol == Protocol::kBb84) {
    s.source.block_length = 2;
    s.source.mean_photon_number = 0.25;
    s.mzi.visibility = kBb84CalibratedVisibility;
    s.randomize_blocks = true;
  } else {
    s.source.block_length = kDpsBlockLength;
    s.source.mean_photon_number = 0.2;
    s.mzi.visibility = kDpsCalibratedVisibility;
    s.randomize_blocks = false;
  }
  return s;
}

double signal_mean_photons(const LinkSetup& setup) {
  return setup.protocol == Protocol::kBb84 ? 2.0 * setup.source.mean_photon_number
                                           : setup.source.mean_photon_number;
}

double total_transmittance(Protocol protocol, const optics::ChannelParams& channel,
                           const optics::InterferometerParams& mzi,
                           const optics::DetectorParams& det) {
  // A BB84 pair puts half its photons into the satellite slots.
  const double duty = protocol == Protocol::kBb84 ? 0.5 : 1.0;
  return channel.transmittance() * mzi.transmittance() * det.efficiency * duty;
}

double vacuum_yield(const optics::DetectorParams& det) {
  const double pd = det.dark_probability();
  return pd * (2.0 - pd);
}

GainQber expected_gain_qber(Protocol protocol, double mu, const optics::ChannelParams& channel,
                            const optics::InterferometerParams& mzi,
                            const optics::DetectorParams& det) {
  channel.validate();
  mzi.validate();
  det.validate();
  require(mu >= 0.0, "expected_gain_qber: mean photon number must be non-negative");
  const double eta = total_transmittance(protocol, channel, mzi, det);
  const double y0 = vacuum_yield(det);
  const double signal = -std::expm1(-mu * eta);
  const double gain = y0 * std::exp(-mu * eta) + signal;
  const double e_det = 0.5 * (1.0 - mzi.visibility);
  const double qber = gain > 0.0 ? (e_det * signal + 0.5 * y0) / gain : 0.0;
  return {gain, qber};
}

double sifting_clock(const LinkSetup& setup) {
  if (setup.protocol == Protocol::kBb84) return 0.5 * setup.source.clock_rate * 0.5;
  const double b = setup.source.block_length;
  return setup.source.clock_rate * (b - 1.0) / b;
}

double LinkStats::gain() const {
  return signals > 0 ? static_cast<double>(clicked) / static_cast<double>(signals) : 0.0;
}

double LinkStats::gain_stderr() const {
  if (signals == 0) return 0.0;
  const double g = gain();
  return std::sqrt(g * (1.0 - g) / static_cast<double>(signals));
}

double LinkStats::qber_stderr() const {
  if (sift.sifted_count == 0) return 0.0;
  const double e = sift.qber;
  return std::sqrt(e * (1.0 - e) / static_cast<double>(sift.sifted_count));
}

namespace {

void validate_setup(const LinkSetup& setup, std::uint64_t slots) {
  setup.source.validate();
  setup.channel.validate();
  setup.mzi.validate();
  setup.detector.validate();
  require(optics::delay_slots(setup.mzi, setup.source.slot_period()) == 1,
          "simulate: interferometer delay must equal one slot");
  if (setup.protocol == Protocol::kBb84) {
    require(setup.source.block_length == 2, "simulate: BB84 needs block_length 2");
    require(slots >= 2 && slots % 2 == 0, "simulate: BB84 needs an even, non-zero slot count");
  } else {
    require(setup.source.block_length >= 2 && kChunkPulses % setup.source.block_length == 0,
            "simulate: DPS block_length must divide 65536");
    require(slots % static_cast<std::uint64_t>(setup.source.block_length) == 0 && slots > 0,
            "simulate: DPS slot count must be a whole number of blocks");
  }
}

std::uint64_t count_valid_signals(const LinkSetup& setup, std::uint64_t slots) {
  if (setup.protocol == Protocol::kBb84) return slots / 2;
  const auto b = static_cast<std::uint64_t>(setup.source.block_length);
  return slots / b * (b - 1);
}

}  // namespace

LinkStats simulate_pipeline(const LinkSetup& setup, std::uint64_t slots, std::uint64_t rng_seed) {
  validate_setup(setup, slots);
  LinkStats stats;
  stats.signals = count_valid_signals(setup, slots);
  std::uint64_t chunk_index = 0;
  for (std::uint64_t start = 0; start < slots; start += kChunkPulses, ++chunk_index) {
    const std::uint64_t n = std::min(kChunkPulses, slots - start);
    auto seed = [&](std::uint64_t stream) {
      return derive_seed(rng_seed, chunk_index * 8 + stream);
    };
    const auto first = static_cast<std::int64_t>(start);
    if (setup.protocol == Protocol::kBb84) {
      const auto symbols = generate_bb84_symbols(n / 2, seed(0));
      const auto bases = generate_basis_choices(n / 2, seed(1));
      const auto phases = bb84_encode(symbols, setup.source);
      auto train = source::emit_train(setup.source, phases, setup.randomize_blocks, seed(2), first);
      train = optics::attenuate(train, setup.channel);
      const auto clicks = bb84_receive(train, bases, setup.mzi, setup.detector, seed(3));
      for (std::size_t i = 0; i < clicks.size(); ++i) {
        if ((clicks.slots[i] & 1) == 1 && (clicks.port0[i] || clicks.port1[i])) ++stats.clicked;
      }
      stats.sift.merge(
          bb84_sift(symbols, bases, clicks, setup.source.clock_rate, seed(4), first));
    } else {
      const auto symbols = generate_dps_symbols(n, seed(0));
      const auto phases = dps_encode(symbols);
      auto train = source::emit_train(setup.source, phases, setup.randomize_blocks, seed(2), first);
      train = optics::attenuate(train, setup.channel);
      const auto clicks =
          optics::detect(optics::interfere(train, setup.mzi), setup.detector, seed(3));
      for (std::size_t i = 0; i < clicks.size(); ++i) {
        if (clicks.slots[i] % setup.source.block_length != 0 &&
            (clicks.port0[i] || clicks.port1[i])) {
          ++stats.clicked;
        }
      }
      stats.sift.merge(dps_sift(symbols, clicks, setup.source.block_length,
                                setup.source.clock_rate, seed(4), first));
    }
  }
  return stats;
}

LinkStats simulate_events(const LinkSetup& setup, std::uint64_t slots, std::uint64_t rng_seed) {
  validate_setup(setup, slots);
  const bool bb84 = setup.protocol == Protocol::kBb84;
  const double mu_pulse = setup.source.mean_photon_number * setup.channel.transmittance();

  // Equiprobable per-signal categories: BB84 (alice basis, bit, bob basis),
  // DPS (bit).
  struct Category {
    bool matched = true;
    std::uint8_t bit = 0;
    double p0 = 0.0;
    double p1 = 0.0;
    double any = 0.0;
  };
  std::vector<Category> categories;
  auto add = [&](bool matched, std::uint8_t bit, double delta_phase) {
    const auto f = optics::fringe(mu_pulse, mu_pulse, delta_phase + setup.mzi.internal_phase,
                                  setup.mzi);
    Category c{matched, bit, optics::click_probability(f.port0, setup.detector),
               optics::click_probability(f.port1, setup.detector), 0.0};
    c.any = 1.0 - (1.0 - c.p0) * (1.0 - c.p1);
    categories.push_back(c);
  };
  if (bb84) {
    for (Basis alice : {Basis::kZ, Basis::kX}) {
      for (std::uint8_t bit : {0, 1}) {
        for (Basis bob : {Basis::kZ, Basis::kX}) {
          add(alice == bob, bit, Bb84Symbol{alice, bit}.phase_delta() + receiver_phase(bob));
        }
      }
    }
  } else {
    add(true, 0, 0.0);
    add(true, 1, kPi);
  }

  std::vector<double> weights;
  double any_mean = 0.0;
  for (const auto& c : categories) {
    weights.push_back(c.any);
    any_mean += c.any;
  }
  any_mean /= static_cast<double>(categories.size());

  LinkStats stats;
  stats.signals = count_valid_signals(setup, slots);
  stats.sift.duration = static_cast<double>(slots) / setup.source.clock_rate;
  if (any_mean > 0.0) {
    Rng rng(derive_seed(rng_seed, 0));
    std::geometric_distribution<std::uint64_t> gap(any_mean);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uint64_t position = 0;  // signals consumed so far
    while (true) {
      const std::uint64_t skip = gap(rng);
      if (skip >= stats.signals - position) break;
      position += skip + 1;
      const Category& c = categories[pick(rng)];
      // Outcome conditional on at least one click.
      const double only0 = c.p0 * (1.0 - c.p1);
      const double only1 = (1.0 - c.p0) * c.p1;
      const double u = uniform01(rng) * c.any;
      const bool c0 = u < only0 || u >= only0 + only1;
      const bool c1 = u >= only0;
      ++stats.clicked;
      if (!c.matched) continue;
      std::uint8_t bit = 0;
      read_bit(c0, c1, rng, bit);
      ++stats.sift.sifted_count;
      if (bit != c.bit) ++stats.sift.error_count;
    }
  }
  finish(stats.sift);
  return stats;
}

void write_sift_json(std::ostream& out, Protocol protocol, double loss_db,
                     const SiftResult& sift) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(protocol);
  j["loss_db"] = loss_db;
  j["sifted_count"] = sift.sifted_count;
  j["error_count"] = sift.error_count;
  j["qber"] = sift.qber;
  j["sifted_rate_bps"] = sift.sifted_rate;
  out << j.dump(2) << '\n';
}

}  // namespace dpm::protocol
