#include "dpm/laser.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "dpm/errors.h"
#include "dpm/io.h"
#include "dpm/random.h"
#include "dpm/stats.h"

namespace dpm::laser {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_field(bool ok, const char* field, const char* what) {
  if (!ok) throw PreconditionError(std::string("laser.") + field + ": " + what);
}

}  // namespace

void LaserParams::validate() const {
  require_field(carrier_lifetime > 0.0 && std::isfinite(carrier_lifetime), "carrier_lifetime",
                "must be positive");
  require_field(photon_lifetime > 0.0 && std::isfinite(photon_lifetime), "photon_lifetime",
                "must be positive");
  require_field(gain_slope > 0.0 && std::isfinite(gain_slope), "gain_slope", "must be positive");
  require_field(transparency_carrier > 0.0 && std::isfinite(transparency_carrier),
                "transparency_carrier", "must be positive");
  require_field(gain_compression >= 0.0 && std::isfinite(gain_compression), "gain_compression",
                "must be non-negative");
  require_field(linewidth_enhancement >= 0.0 && std::isfinite(linewidth_enhancement),
                "linewidth_enhancement", "must be non-negative");
  require_field(spontaneous_fraction >= 0.0 && spontaneous_fraction <= 1.0,
                "spontaneous_fraction", "must lie in [0, 1]");
  require_field(injection_coupling > 0.0 && std::isfinite(injection_coupling),
                "injection_coupling", "must be positive");
  require_field(threshold_current > 0.0 && std::isfinite(threshold_current), "threshold_current",
                "must be positive");
  require_field(std::isfinite(detuning) && std::abs(detuning) <= kMaxDetuningHz, "detuning",
                "must be finite and within +/-50 GHz");
}

double LaserParams::threshold_carrier() const {
  return transparency_carrier + 1.0 / (gain_slope * photon_lifetime);
}

double LaserParams::pump_rate(double drive) const {
  return drive / threshold_current * threshold_carrier() / carrier_lifetime;
}

SteadyState steady_state(const LaserParams& params, double drive) {
  params.validate();
  const double n_th = params.threshold_carrier();
  const double pump = params.pump_rate(drive);
  if (pump * params.carrier_lifetime <= n_th) {
    return {std::max(pump * params.carrier_lifetime, 0.0), 0.0, 0.0};
  }
  // With G = 1/tau_p: N = N_th + eps S / (g tau_p) and P = N / tau_n + S / tau_p.
  const double eps = params.gain_compression;
  const double tau_p = params.photon_lifetime;
  const double photons =
      (pump - n_th / params.carrier_lifetime) /
      (1.0 / tau_p + eps / (params.gain_slope * tau_p * params.carrier_lifetime));
  const double carrier = n_th + eps * photons / (params.gain_slope * tau_p);
  const double frequency =
      params.linewidth_enhancement * eps * photons / (2.0 * kTwoPi * tau_p);
  return {carrier, photons, frequency};
}

DriveWaveform::DriveWaveform(double start_time, double sample_interval,
                             std::vector<double> current)
    : start_time_(start_time), interval_(sample_interval), current_(std::move(current)) {
  require(std::isfinite(start_time), "DriveWaveform: start time must be finite");
  require(sample_interval > 0.0 && std::isfinite(sample_interval),
          "DriveWaveform: sample interval must be positive");
  require(current_.size() >= 2, "DriveWaveform: needs at least two samples");
  for (std::size_t i = 0; i < current_.size(); ++i) {
    if (!std::isfinite(current_[i])) {
      throw PreconditionError("DriveWaveform: non-finite current at sample " + std::to_string(i));
    }
  }
}

DriveWaveform DriveWaveform::from_samples(std::span<const std::pair<double, double>> samples) {
  require(samples.size() >= 2, "DriveWaveform: needs at least two samples");
  const double interval = samples[1].first - samples[0].first;
  require(interval > 0.0, "DriveWaveform: times must be strictly increasing");
  std::vector<double> current;
  current.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0) {
      const double step = samples[i].first - samples[i - 1].first;
      require(step > 0.0, "DriveWaveform: times must be strictly increasing");
      require(std::abs(step - interval) <= 1e-9 * interval,
              "DriveWaveform: sample interval must be uniform");
    }
    current.push_back(samples[i].second);
  }
  return DriveWaveform(samples[0].first, interval, std::move(current));
}

DriveWaveform DriveWaveform::constant(double level, double duration, double sample_interval) {
  require(duration > 0.0 && sample_interval > 0.0,
          "DriveWaveform: duration and interval must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(duration / sample_interval - 1e-9)) + 1;
  return DriveWaveform(0.0, sample_interval, std::vector<double>(std::max<std::size_t>(n, 2), level));
}

DriveWaveform& DriveWaveform::set_level(double begin, double end, double level) {
  require(std::isfinite(level), "DriveWaveform: level must be finite");
  for (std::size_t i = 0; i < current_.size(); ++i) {
    const double t = time(i);
    if (t >= begin && t < end) current_[i] = level;
  }
  return *this;
}

double DriveWaveform::end_time() const { return time(current_.size() - 1); }

double DriveWaveform::max_current() const {
  return *std::max_element(current_.begin(), current_.end());
}

double DriveWaveform::at(double t) const {
  const double pos = (t - start_time_) / interval_;
  const double last = static_cast<double>(current_.size() - 1);
  constexpr double kSlack = 1e-9;
  if (pos < -kSlack || pos > last + kSlack) {
    throw PreconditionError("DriveWaveform: time outside the covered window");
  }
  const double clamped = std::clamp(pos, 0.0, last);
  const auto i = std::min(static_cast<std::size_t>(clamped), current_.size() - 2);
  const double frac = clamped - static_cast<double>(i);
  return current_[i] + frac * (current_[i + 1] - current_[i]);
}

std::complex<double> FieldTrace::threshold_frame_field(double t) const {
  require(times.size() >= 2, "FieldTrace: needs at least two samples");
  const double interval = times[1] - times[0];
  const double pos = (t - times.front()) / interval;
  const double last = static_cast<double>(times.size() - 1);
  if (pos < -1e-9 || pos > last + 1e-9) {
    throw PreconditionError("FieldTrace: time outside the trace window");
  }
  const double clamped = std::clamp(pos, 0.0, last);
  const auto i = std::min(static_cast<std::size_t>(clamped), times.size() - 2);
  const double frac = clamped - static_cast<double>(i);
  const std::complex<double> e = field[i] + frac * (field[i + 1] - field[i]);
  if (frame_frequency == 0.0) return e;
  return e * std::polar(1.0, kTwoPi * frame_frequency * t);
}

FieldTrace FieldTrace::from_intensity_phase(std::vector<double> times,
                                            std::span<const double> intensity,
                                            std::vector<double> phase) {
  require(times.size() == intensity.size() && times.size() == phase.size(),
          "FieldTrace: column lengths differ");
  FieldTrace trace;
  trace.field.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(intensity[i] >= 0.0, "FieldTrace: intensity must be non-negative");
    trace.field.push_back(std::polar(std::sqrt(intensity[i]), phase[i]));
  }
  trace.carrier.assign(times.size(), 0.0);
  trace.times = std::move(times);
  trace.phase = std::move(phase);
  return trace;
}

namespace {

struct State {
  std::complex<double> field;
  double carrier;
};

class RateEquations {
 public:
  RateEquations(const LaserParams& p, const DriveWaveform& drive, const FieldTrace* injection,
                double frame_frequency)
      : p_(p),
        drive_(drive),
        injection_(injection),
        frame_(frame_frequency),
        inv_tau_p_(1.0 / p.photon_lifetime),
        pump_scale_(p.pump_rate(1.0)) {}

  State derivative(const State& y, double t) const {
    const double photons = std::norm(y.field);
    const double linear_gain = p_.gain_slope * (y.carrier - p_.transparency_carrier);
    const double gain = linear_gain / (1.0 + p_.gain_compression * photons);
    const double amplitude_rate = 0.5 * (gain - inv_tau_p_);
    const double phase_rate =
        0.5 * p_.linewidth_enhancement * (linear_gain - inv_tau_p_) - kTwoPi * frame_;
    std::complex<double> dfield = std::complex<double>(amplitude_rate, phase_rate) * y.field;
    if (injection_ != nullptr) {
      const double rotation = kTwoPi * (p_.detuning - frame_) * t;
      dfield += p_.injection_coupling * injection_->threshold_frame_field(t) *
                std::polar(1.0, rotation);
    }
    const double dcarrier =
        pump_scale_ * drive_.at(t) - y.carrier / p_.carrier_lifetime - gain * photons;
    return {dfield, dcarrier};
  }

  double spontaneous_rate(double carrier) const {
    return p_.spontaneous_fraction * std::max(carrier, 0.0) / p_.carrier_lifetime;
  }

 private:
  const LaserParams& p_;
  const DriveWaveform& drive_;
  const FieldTrace* injection_;
  double frame_;
  double inv_tau_p_;
  double pump_scale_;
};

}  // namespace

FieldTrace integrate(const LaserParams& params, const DriveWaveform& drive,
                     const FieldTrace* injection, std::uint64_t noise_seed, double dt,
                     const IntegrateOptions& options) {
  params.validate();
  require(dt > 0.0 && std::isfinite(dt), "integrate: dt must be positive");
  require(dt <= params.photon_lifetime / 10.0 * (1.0 + 1e-12),
          "integrate: dt must not exceed photon_lifetime / 10");
  const double t0 = drive.start_time();
  const double span = drive.end_time() - t0;
  const auto steps = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
  require(steps >= 1, "integrate: drive window shorter than one step");
  if (injection != nullptr) {
    require(injection->size() >= 2 && injection->times.front() <= t0 + 1e-9 * dt &&
                injection->times.back() >= t0 + static_cast<double>(steps) * dt - 1e-9 * dt,
            "integrate: injection trace must cover the integration window");
  }

  const RateEquations eq(params, drive, injection, options.frame_frequency);
  const bool noisy = params.spontaneous_fraction > 0.0;
  State y{};
  y.carrier = options.initial_carrier.value_or(
      std::min(std::max(params.pump_rate(drive.at(t0)), 0.0) * params.carrier_lifetime,
               params.threshold_carrier()));
  y.field = options.initial_field.value_or(
      noisy ? std::complex<double>{} : std::complex<double>{kNoiselessSeedAmplitude, 0.0});

  FieldTrace trace;
  trace.frame_frequency = options.frame_frequency;
  trace.times.reserve(steps + 1);
  trace.field.reserve(steps + 1);
  trace.carrier.reserve(steps + 1);
  trace.phase.reserve(steps + 1);

  auto record = [&](double t) {
    double phase = std::arg(y.field);
    if (!trace.phase.empty()) {
      phase = trace.phase.back() + stats::wrap_pi(phase - std::arg(trace.field.back()));
    }
    trace.times.push_back(t);
    trace.field.push_back(y.field);
    trace.carrier.push_back(y.carrier);
    trace.phase.push_back(phase);
  };
  record(t0);

  Rng rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    const double t_next = t0 + static_cast<double>(k + 1) * dt;
    std::complex<double> noise{};
    if (noisy) {
      const double sigma = std::sqrt(0.5 * eq.spontaneous_rate(y.carrier) * dt);
      const double re = normal(rng);
      const double im = normal(rng);
      noise = {sigma * re, sigma * im};
    }
    const State k1 = eq.derivative(y, t);
    const State predictor{y.field + k1.field * dt + noise, y.carrier + k1.carrier * dt};
    const State k2 = eq.derivative(predictor, t_next);
    y.field += 0.5 * (k1.field + k2.field) * dt + noise;
    y.carrier += 0.5 * (k1.carrier + k2.carrier) * dt;
    if (!std::isfinite(y.field.real()) || !std::isfinite(y.field.imag()) ||
        !std::isfinite(y.carrier)) {
      throw IntegrationDiverged(k + 1, "integrate: non-finite state at sample " +
                                           std::to_string(k + 1));
    }
    record(t_next);
  }

  const double reference = steady_state(params, drive.max_current()).photons;
  trace.extinction_floor = reference > 0.0 ? kExtinctionFraction * reference
                                           : std::numeric_limits<double>::infinity();
  return trace;
}

std::vector<ChirpSample> instantaneous_frequency(const FieldTrace& trace) {
  require(trace.size() >= 3, "instantaneous_frequency: needs at least three samples");
  return instantaneous_frequency(trace, trace.times.front(), trace.times.back());
}

std::vector<ChirpSample> instantaneous_frequency(const FieldTrace& trace, double begin,
                                                 double end) {
  require(trace.size() >= 3, "instantaneous_frequency: needs at least three samples");
  std::vector<ChirpSample> out;
  for (std::size_t i = 1; i + 1 < trace.size(); ++i) {
    const double t = trace.times[i];
    if (t < begin || t > end) continue;
    for (std::size_t j = i - 1; j <= i + 1; ++j) {
      if (!trace.phase_defined(j)) {
        throw UndefinedPhase("instantaneous_frequency: sample " + std::to_string(j) +
                             " is below the extinction floor");
      }
    }
    const double dphase = trace.phase[i + 1] - trace.phase[i - 1];
    const double dt = trace.times[i + 1] - trace.times[i - 1];
    out.push_back({t, dphase / dt / kTwoPi});
  }
  return out;
}

std::vector<double> phase_difference(const FieldTrace& master, const FieldTrace& slave,
                                     double begin, double end) {
  require(end >= begin, "phase_difference: window end precedes begin");
  require(master.size() >= 2, "phase_difference: master trace too short");
  const double interval = master.times[1] - master.times[0];
  std::vector<double> out;
  for (std::size_t i = 0; i < slave.size(); ++i) {
    const double t = slave.times[i];
    if (t < begin || t > end) continue;
    const double pos = (t - master.times.front()) / interval;
    if (pos < -1e-9 || pos > static_cast<double>(master.size() - 1) + 1e-9) {
      throw PreconditionError("phase_difference: window outside the master trace");
    }
    const auto j = std::min(static_cast<std::size_t>(std::max(pos, 0.0)), master.size() - 2);
    const double frac = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
    if (!slave.phase_defined(i) || !master.phase_defined(j) || !master.phase_defined(j + 1)) {
      throw UndefinedPhase("phase_difference: window includes extinguished samples");
    }
    const double master_phase = master.phase[j] + frac * (master.phase[j + 1] - master.phase[j]);
    const double frame_shift = kTwoPi * (slave.frame_frequency - master.frame_frequency) * t;
    out.push_back(slave.phase[i] - master_phase + frame_shift);
  }
  return out;
}

double locked_phase_offset(const FieldTrace& master, const FieldTrace& slave, double begin,
                           double end) {
  const std::vector<double> diff = phase_difference(master, slave, begin, end);
  require(!diff.empty(), "locked_phase_offset: empty window");
  return stats::circular_mean(diff);
}

void write_trace_csv(std::ostream& out, const FieldTrace& trace) {
  io::CsvWriter csv(out);
  csv.field("time_s").field("intensity").field("carrier").field("phase_rad").end_row();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    csv.field(trace.times[i]).field(trace.intensity(i)).field(trace.carrier[i]).field(trace.phase[i]);
    csv.end_row();
  }
}

}  // namespace dpm::laser
