#pragma once

// Single-mode semiconductor laser rate equations with optical injection and
// Langevin spontaneous-emission noise.
//
// Normalization: the field E is scaled so that |E|^2 is the intracavity photon
// number, the carrier N is a carrier number, and the pump enters as carriers
// per second. Drive waveforms are in user drive units; `threshold_current`
// fixes the drive value at which the noiseless laser reaches threshold.
//
//   dE/dt = 1/2 (G - 1/tau_p) E + i alpha/2 (G_lin - 1/tau_p) E
//           + kappa E_inj(t) exp(i 2 pi detuning t) + F(t)
//   dN/dt = P(t) - N / tau_n - G |E|^2
//   G_lin = g (N - N_tr),   G = G_lin / (1 + eps |E|^2)
//
// F is circular complex Gaussian noise with <|F|^2> dt = beta N / tau_n dt.
// Frequencies are measured relative to the cold-cavity threshold frequency
// unless a trace declares a rotating frame (FieldTrace::frame_frequency).

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dpm::laser {

// Largest |detuning| accepted by LaserParams::validate(). Beyond this the
// single-mode injection model is outside its intended range.
inline constexpr double kMaxDetuningHz = 50e9;

// Fraction of the steady-state photon number below which the phase of a
// trace sample is considered undefined.
inline constexpr double kExtinctionFraction = 1e-3;

struct LaserParams {
  double carrier_lifetime = 1e-9;       // s
  double photon_lifetime = 2e-12;       // s
  double gain_slope = 2.5e8;            // 1/s per carrier above transparency
  double transparency_carrier = 8000.0;
  double gain_compression = 1e-2;       // per photon
  double linewidth_enhancement = 3.0;
  double spontaneous_fraction = 1e-4;
  double injection_coupling = 1e11;     // 1/s
  double threshold_current = 1.0;       // drive units
  double detuning = 0.0;                // Hz, master minus slave

  // Throws PreconditionError naming the offending field.
  void validate() const;

  double threshold_carrier() const;
  // Pump rate in carriers per second for a drive value.
  double pump_rate(double drive) const;
};

struct SteadyState {
  double carrier = 0.0;
  double photons = 0.0;
  double frequency = 0.0;  // Hz, relative to threshold frequency
};

// Noiseless stationary solution. Below threshold the photon number is zero.
SteadyState steady_state(const LaserParams& params, double drive);

class DriveWaveform {
 public:
  DriveWaveform(double start_time, double sample_interval, std::vector<double> current);

  // Samples must have strictly increasing, uniformly spaced times.
  static DriveWaveform from_samples(std::span<const std::pair<double, double>> samples);
  static DriveWaveform constant(double level, double duration, double sample_interval);

  // Sets every sample with time in [begin, end) to `level`.
  DriveWaveform& set_level(double begin, double end, double level);

  double start_time() const { return start_time_; }
  double end_time() const;
  double sample_interval() const { return interval_; }
  std::size_t size() const { return current_.size(); }
  double time(std::size_t i) const { return start_time_ + static_cast<double>(i) * interval_; }
  double current(std::size_t i) const { return current_[i]; }
  double max_current() const;

  // Linear interpolation; PreconditionError outside the covered window.
  double at(double t) const;

 private:
  double start_time_;
  double interval_;
  std::vector<double> current_;
};

struct FieldTrace {
  std::vector<double> times;
  std::vector<std::complex<double>> field;
  std::vector<double> carrier;
  std::vector<double> phase;  // unwrapped arg(field)
  double frame_frequency = 0.0;
  double extinction_floor = 0.0;

  std::size_t size() const { return times.size(); }
  double intensity(std::size_t i) const { return std::norm(field[i]); }
  bool phase_defined(std::size_t i) const { return intensity(i) >= extinction_floor; }

  // Field at time t in the threshold frame, linearly interpolated.
  std::complex<double> threshold_frame_field(double t) const;

  // Builds a trace from intensity and unwrapped phase samples.
  static FieldTrace from_intensity_phase(std::vector<double> times,
                                         std::span<const double> intensity,
                                         std::vector<double> phase);
};

struct IntegrateOptions {
  // Rotating frame (Hz) in which the output field and phase are expressed.
  double frame_frequency = 0.0;
  // Defaults to the noiseless stationary carrier for drive(t0), capped at
  // the threshold carrier.
  std::optional<double> initial_carrier;
  // Defaults to zero when spontaneous emission is on, otherwise a small real
  // seed so that the noiseless laser can turn on.
  std::optional<std::complex<double>> initial_field;
};

inline constexpr double kNoiselessSeedAmplitude = 1e-3;

// Stochastic Heun integration on a fixed step. Output has one sample per step,
// starting at drive.start_time(). Deterministic for fixed seed and dt.
FieldTrace integrate(const LaserParams& params, const DriveWaveform& drive,
                     const FieldTrace* injection, std::uint64_t noise_seed, double dt,
                     const IntegrateOptions& options = {});

struct ChirpSample {
  double time = 0.0;
  double chirp = 0.0;  // Hz, relative to the trace frame
};

// Central-difference chirp over the whole trace (length size() - 2).
std::vector<ChirpSample> instantaneous_frequency(const FieldTrace& trace);
// Restricted to samples with time in [begin, end].
std::vector<ChirpSample> instantaneous_frequency(const FieldTrace& trace, double begin,
                                                 double end);

// Threshold-frame phase difference slave - master at every slave sample in
// [begin, end]; master phase is linearly interpolated.
std::vector<double> phase_difference(const FieldTrace& master, const FieldTrace& slave,
                                     double begin, double end);

// Circular mean of phase_difference over the window, in (-pi, pi].
double locked_phase_offset(const FieldTrace& master, const FieldTrace& slave, double begin,
                           double end);

// CSV with header time_s,intensity,carrier,phase_rad.
void write_trace_csv(std::ostream& out, const FieldTrace& trace);

}  // namespace dpm::laser
