#pragma once

// BB84 (phase-encoded pulse pairs) and differential-phase-shift protocols:
// symbol generation, encoding onto the source, sifting, the closed-form
// gain/QBER model and two Monte Carlo link simulators.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpm/optics.h"
#include "dpm/source.h"

namespace dpm::protocol {

enum class Protocol { kBb84, kDps };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view name);

enum class Basis : std::uint8_t { kZ = 0, kX = 1 };

struct Bb84Symbol {
  Basis basis = Basis::kZ;
  std::uint8_t bit = 0;

  // (Z,0) -> 0, (X,0) -> pi/2, (Z,1) -> pi, (X,1) -> 3 pi/2.
  double phase_delta() const;
};

struct DpsSymbol {
  std::uint8_t bit = 0;

  double phase_delta() const;
};

// Interferometer phase that maps a basis onto the port0/port1 = bit 0/1 axis.
double receiver_phase(Basis basis);

std::vector<Bb84Symbol> generate_bb84_symbols(std::size_t count, std::uint64_t rng_seed);
std::vector<DpsSymbol> generate_dps_symbols(std::size_t count, std::uint64_t rng_seed);
// Bob's passive 50/50 basis choice, one fair coin per pair.
std::vector<Basis> generate_basis_choices(std::size_t count, std::uint64_t rng_seed);

// Two pulse phases per symbol: (0, phase_delta). Needs block_length 2.
std::vector<double> bb84_encode(std::span<const Bb84Symbol> symbols,
                                const source::SourceConfig& config);
// Running phase: pulse i carries the phase of pulse i-1 plus phase_delta(i).
std::vector<double> dps_encode(std::span<const DpsSymbol> symbols);

// Routes each interference slot through the interferometer set to the basis
// of the pair that owns the later pulse, then detects. The train must start
// on a pair boundary.
optics::ClickRecord bb84_receive(const source::PulseTrain& train, std::span<const Basis> bob_bases,
                                 const optics::InterferometerParams& mzi,
                                 const optics::DetectorParams& det, std::uint64_t rng_seed);

struct SiftResult {
  std::uint64_t sifted_count = 0;
  std::uint64_t error_count = 0;
  double qber = 0.0;
  double sifted_rate = 0.0;  // bits per second
  double duration = 0.0;     // seconds of transmission covered

  // Adds counts and durations; recomputes qber and rate.
  void merge(const SiftResult& other);
};

// Keeps central slots of matched-basis pairs with at least one click.
// Double clicks get a fair-coin bit drawn from `tie_seed`. `first_slot` is
// the slot index of the first pulse of symbols[0].
SiftResult bb84_sift(std::span<const Bb84Symbol> symbols, std::span<const Basis> bob_bases,
                     const optics::ClickRecord& clicks, double clock_rate,
                     std::uint64_t tie_seed, std::int64_t first_slot = 0);

// One bit per clicked interference slot, discarding slots whose predecessor
// belongs to another block. symbols[i] belongs to slot first_slot + i.
SiftResult dps_sift(std::span<const DpsSymbol> symbols, const optics::ClickRecord& clicks,
                    int block_length, double clock_rate, std::uint64_t tie_seed,
                    std::int64_t first_slot = 0);

struct LinkSetup {
  Protocol protocol = Protocol::kBb84;
  source::SourceConfig source;
  optics::ChannelParams channel;
  optics::InterferometerParams mzi;
  optics::DetectorParams detector;
  bool randomize_blocks = true;
};

// Defaults: BB84 at 0.25 photons/pulse (0.5 per pair) with V = 0.952, DPS at
// 0.2 photons/pulse with V = 0.962 and 65536-pulse coherence blocks.
LinkSetup default_setup(Protocol protocol);

inline constexpr double kBb84CalibratedVisibility = 0.952;
inline constexpr double kDpsCalibratedVisibility = 0.962;
inline constexpr int kDpsBlockLength = 65536;

// Signal mean photon number seen by the key-rate model: per pair for BB84,
// per pulse for DPS.
double signal_mean_photons(const LinkSetup& setup);

// Fraction of signal photons that reach a sifting gate and are detected.
double total_transmittance(Protocol protocol, const optics::ChannelParams& channel,
                           const optics::InterferometerParams& mzi,
                           const optics::DetectorParams& det);

// Probability of a click in either port of one gate with no signal.
double vacuum_yield(const optics::DetectorParams& det);

struct GainQber {
  double gain = 0.0;  // probability per signal of at least one click
  double qber = 0.0;
};

// Q = 1 - (1 - Y0) exp(-mu eta), E = [e_det (1 - exp(-mu eta)) + Y0 / 2] / Q.
GainQber expected_gain_qber(Protocol protocol, double mu, const optics::ChannelParams& channel,
                            const optics::InterferometerParams& mzi,
                            const optics::DetectorParams& det);

// Signals per second that can yield a sifted bit (basis match and block edges
// included).
double sifting_clock(const LinkSetup& setup);

struct LinkStats {
  std::uint64_t signals = 0;  // pairs (BB84) or interference slots (DPS)
  std::uint64_t clicked = 0;  // signals with at least one click
  SiftResult sift;

  double gain() const;
  // Binomial standard errors.
  double gain_stderr() const;
  double qber_stderr() const;
};

// Full pipeline: symbols -> encode -> emit -> attenuate -> interfere ->
// detect -> sift, processed in block-aligned chunks with derived seeds.
LinkStats simulate_pipeline(const LinkSetup& setup, std::uint64_t slots, std::uint64_t rng_seed);

// Samples the same per-signal click distribution as the pipeline, but skips
// directly between signals with at least one click. Cost scales with the
// number of clicks, not slots.
LinkStats simulate_events(const LinkSetup& setup, std::uint64_t slots, std::uint64_t rng_seed);

// JSON object with keys protocol, loss_db, sifted_count, error_count, qber,
// sifted_rate_bps.
void write_sift_json(std::ostream& out, Protocol protocol, double loss_db,
                     const SiftResult& sift);

}  // namespace dpm::protocol
