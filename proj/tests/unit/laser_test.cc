#include "dpm/laser.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dpm/errors.h"
#include "dpm/stats.h"
#include "gtest/gtest.h"

namespace dpm::laser {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDt = 2e-13;

LaserParams noiseless() {
  LaserParams p;
  p.spontaneous_fraction = 0.0;
  return p;
}

// Stationary photon number by bisection on the carrier balance, with the
// carrier eliminated through the gain-equals-loss condition.
double root_found_photons(const LaserParams& p, double drive) {
  const double pump = drive / p.threshold_current *
                      (p.transparency_carrier + 1.0 / (p.gain_slope * p.photon_lifetime)) /
                      p.carrier_lifetime;
  auto carrier_of = [&](double s) {
    return p.transparency_carrier + (1.0 + p.gain_compression * s) / (p.gain_slope * p.photon_lifetime);
  };
  auto balance = [&](double s) {
    return pump - carrier_of(s) / p.carrier_lifetime - s / p.photon_lifetime;
  };
  double lo = 0.0;
  double hi = pump * p.photon_lifetime;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(Laser, NoiselessFixedPointMatchesRootFinding) {
  const LaserParams p = noiseless();
  const auto drive = DriveWaveform::constant(1.5, 10 * p.carrier_lifetime, 1e-12);
  const FieldTrace trace = integrate(p, drive, nullptr, 7, kDt);

  const double s_ref = root_found_photons(p, 1.5);
  const double n_ref = p.transparency_carrier +
                       (1.0 + p.gain_compression * s_ref) / (p.gain_slope * p.photon_lifetime);
  const std::size_t last = trace.size() - 1;
  EXPECT_NEAR(trace.intensity(last) / s_ref, 1.0, 1e-3);
  EXPECT_NEAR(trace.carrier[last] / n_ref, 1.0, 1e-3);

  const SteadyState ss = steady_state(p, 1.5);
  EXPECT_NEAR(ss.photons / s_ref, 1.0, 1e-9);
  EXPECT_NEAR(ss.carrier / n_ref, 1.0, 1e-9);
}

TEST(Laser, SteadyStateBelowThresholdHasNoPhotons) {
  const SteadyState ss = steady_state(LaserParams{}, 0.8);
  EXPECT_EQ(ss.photons, 0.0);
  EXPECT_NEAR(ss.carrier, 0.8 * LaserParams{}.threshold_carrier(), 1e-6);
}

TEST(Laser, ThresholdStepOvershootsSteadyLevel) {
  const LaserParams p;
  auto drive = DriveWaveform::constant(0.8, 4e-9, 1e-12);
  drive.set_level(0.5e-9, 10.0, 1.5);
  const FieldTrace trace = integrate(p, drive, nullptr, 3, kDt);

  double peak = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) peak = std::max(peak, trace.intensity(i));
  const double steady = steady_state(p, 1.5).photons;
  EXPECT_GT(peak, 1.5 * steady);
  // Settled again well after the relaxation oscillations.
  EXPECT_NEAR(trace.intensity(trace.size() - 1) / steady, 1.0, 0.1);
}

TEST(Laser, ZeroDriveDecaysToSpontaneousFloor) {
  const LaserParams p;
  const auto drive = DriveWaveform::constant(0.0, 3e-9, 1e-12);
  IntegrateOptions opt;
  opt.initial_carrier = 1.02 * p.threshold_carrier();
  opt.initial_field = std::sqrt(10.0);
  const FieldTrace trace = integrate(p, drive, nullptr, 11, kDt, opt);
  const std::size_t last = trace.size() - 1;
  EXPECT_LT(trace.intensity(last), 1e-3 * steady_state(p, 1.5).photons);
  EXPECT_FALSE(trace.phase_defined(last));
  EXPECT_THROW(instantaneous_frequency(trace), UndefinedPhase);
}

TEST(Laser, IntensityNonNegativeAndPhaseContinuous) {
  const LaserParams p;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto drive = DriveWaveform::constant(0.7, 2e-9, 1e-12);
    drive.set_level(0.25e-9, 1.0e-9, 2.0);
    const FieldTrace trace = integrate(p, drive, nullptr, seed, kDt);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      ASSERT_GE(trace.intensity(i), 0.0);
      if (i > 0 && trace.phase_defined(i) && trace.phase_defined(i - 1)) {
        ASSERT_LT(std::abs(trace.phase[i] - trace.phase[i - 1]), kPi);
        ASSERT_NEAR(stats::wrap_pi(trace.phase[i] - std::arg(trace.field[i])), 0.0, 1e-9);
      }
    }
  }
}

TEST(Laser, SameSeedIsBitIdentical) {
  const LaserParams p;
  auto drive = DriveWaveform::constant(0.8, 1e-9, 1e-12);
  drive.set_level(0.2e-9, 0.6e-9, 2.0);
  const FieldTrace a = integrate(p, drive, nullptr, 99, kDt);
  const FieldTrace b = integrate(p, drive, nullptr, 99, kDt);
  const FieldTrace c = integrate(p, drive, nullptr, 100, kDt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.field[i], b.field[i]);
    ASSERT_EQ(a.carrier[i], b.carrier[i]);
  }
  EXPECT_NE(a.field.back(), c.field.back());
}

TEST(Laser, HeunIsSecondOrder) {
  const LaserParams p = noiseless();
  const SteadyState ss = steady_state(p, 1.5);
  IntegrateOptions opt;
  opt.initial_carrier = p.threshold_carrier();
  opt.initial_field = 0.5 * std::sqrt(ss.photons);
  const auto drive = DriveWaveform::constant(1.5, 0.4e-9, 1e-12);
  auto final_state = [&](double dt) {
    const FieldTrace t = integrate(p, drive, nullptr, 1, dt, opt);
    return std::make_pair(t.field.back(), t.carrier.back());
  };
  const auto y1 = final_state(kDt);
  const auto y2 = final_state(kDt / 2);
  const auto y3 = final_state(kDt / 4);
  auto distance = [&](const auto& a, const auto& b) {
    return std::abs(a.first - b.first) / std::abs(b.first) +
           std::abs(a.second - b.second) / std::abs(b.second);
  };
  const double d1 = distance(y1, y2);
  const double d2 = distance(y2, y3);
  ASSERT_GT(d2, 0.0);
  EXPECT_GT(d1 / d2, 3.5);
}

TEST(Laser, Preconditions) {
  const LaserParams p;
  const auto drive = DriveWaveform::constant(1.5, 1e-10, 1e-12);
  EXPECT_THROW(integrate(p, drive, nullptr, 1, p.photon_lifetime / 5), PreconditionError);
  EXPECT_THROW(integrate(p, drive, nullptr, 1, -kDt), PreconditionError);

  LaserParams bad = p;
  bad.linewidth_enhancement = -1.0;
  EXPECT_THROW(bad.validate(), PreconditionError);
  bad = p;
  bad.spontaneous_fraction = 1.5;
  EXPECT_THROW(bad.validate(), PreconditionError);
  bad = p;
  bad.detuning = 2 * kMaxDetuningHz;
  EXPECT_THROW(bad.validate(), PreconditionError);
  bad = p;
  bad.carrier_lifetime = 0.0;
  EXPECT_THROW(bad.validate(), PreconditionError);

  // Injection trace shorter than the drive window.
  const auto short_drive = DriveWaveform::constant(1.5, 5e-11, 1e-12);
  const FieldTrace master = integrate(p, short_drive, nullptr, 1, kDt);
  EXPECT_THROW(integrate(p, drive, &master, 1, kDt), PreconditionError);
}

TEST(Laser, DivergenceNamesSample) {
  const LaserParams p;
  IntegrateOptions opt;
  opt.initial_field = std::complex<double>(1e200, 0.0);
  const auto drive = DriveWaveform::constant(1.5, 1e-11, 1e-12);
  try {
    integrate(p, drive, nullptr, 1, kDt, opt);
    FAIL() << "expected divergence";
  } catch (const IntegrationDiverged& e) {
    EXPECT_EQ(e.sample_index(), 1u);
    EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos);
  }
}

TEST(DriveWaveform, RejectsNonUniformOrDecreasingTimes) {
  const std::vector<std::pair<double, double>> ok{{0.0, 1.0}, {1e-12, 1.0}, {2e-12, 2.0}};
  const auto w = DriveWaveform::from_samples(ok);
  EXPECT_DOUBLE_EQ(w.at(1.5e-12), 1.5);
  EXPECT_THROW(w.at(3e-12), PreconditionError);

  const std::vector<std::pair<double, double>> uneven{{0.0, 1.0}, {1e-12, 1.0}, {3e-12, 2.0}};
  EXPECT_THROW(DriveWaveform::from_samples(uneven), PreconditionError);
  const std::vector<std::pair<double, double>> backwards{{0.0, 1.0}, {-1e-12, 1.0}};
  EXPECT_THROW(DriveWaveform::from_samples(backwards), PreconditionError);
  EXPECT_THROW(DriveWaveform(0.0, 1e-12, {1.0, std::nan("")}), PreconditionError);
}

TEST(InstantaneousFrequency, LinearPhaseGivesConstantChirp) {
  std::vector<double> times;
  std::vector<double> phase;
  for (int i = 0; i < 200; ++i) {
    times.push_back(i * 1e-12);
    phase.push_back(2 * kPi * 1e9 * times.back());
  }
  const std::vector<double> intensity(times.size(), 1.0);
  const auto trace = FieldTrace::from_intensity_phase(times, intensity, phase);
  const auto chirp = instantaneous_frequency(trace);
  ASSERT_EQ(chirp.size(), times.size() - 2);
  for (const auto& c : chirp) EXPECT_NEAR(c.chirp, 1e9, 1e-3);
}

TEST(InstantaneousFrequency, SteadyStateIsFlatInItsFrame) {
  const LaserParams p = noiseless();
  const SteadyState ss = steady_state(p, 1.5);
  IntegrateOptions opt;
  opt.initial_carrier = ss.carrier;
  opt.initial_field = std::sqrt(ss.photons);
  opt.frame_frequency = ss.frequency;
  const auto drive = DriveWaveform::constant(1.5, 2e-9, 1e-12);
  const FieldTrace trace = integrate(p, drive, nullptr, 5, kDt, opt);
  for (const auto& c : instantaneous_frequency(trace)) {
    ASSERT_LT(std::abs(c.chirp), 1e-6 * ss.frequency);
  }
}

TEST(InstantaneousFrequency, PerturbationChirpIntegratesToPhaseStep) {
  const LaserParams p = noiseless();
  const SteadyState ss = steady_state(p, 1.5);
  IntegrateOptions opt;
  opt.initial_carrier = ss.carrier;
  opt.initial_field = std::sqrt(ss.photons);
  opt.frame_frequency = ss.frequency;
  const double t0 = 0.5e-9;
  const double tm = 250e-12;
  auto drive = DriveWaveform::constant(1.5, 2.5e-9, kDt);
  drive.set_level(t0 - 0.5 * kDt, t0 + tm - 0.5 * kDt, 1.5 + 0.087);
  const FieldTrace trace = integrate(p, drive, nullptr, 1, kDt, opt);
  const auto chirp = instantaneous_frequency(trace);

  double peak = 0.0;
  double integral = 0.0;
  for (const auto& c : chirp) {
    peak = std::max(peak, std::abs(c.chirp));
    integral += c.chirp * kDt;
  }
  double before = 0.0;
  double after = 0.0;
  for (const auto& c : chirp) {
    if (c.time < t0 - 2 * kDt) before = std::max(before, std::abs(c.chirp));
    if (c.time > t0 + tm + 0.5e-9) after = std::max(after, std::abs(c.chirp));
  }
  EXPECT_LT(before, 1e-6 * peak);
  EXPECT_LT(after, 1e-2 * peak);

  const double phase_step = trace.phase[trace.size() - 2] - trace.phase[1];
  EXPECT_NEAR(integral * 2 * kPi / phase_step, 1.0, 0.02);
  // Close to a pi step for this drive amplitude.
  EXPECT_NEAR(phase_step, kPi, 0.1);
}

TEST(LockedPhaseOffset, TrivialOffsets) {
  std::vector<double> times;
  std::vector<double> phase;
  for (int i = 0; i < 100; ++i) {
    times.push_back(i * 1e-12);
    phase.push_back(0.3 + 1e9 * times.back());
  }
  const std::vector<double> intensity(times.size(), 4.0);
  const auto master = FieldTrace::from_intensity_phase(times, intensity, phase);
  EXPECT_NEAR(locked_phase_offset(master, master, 0.0, 99e-12), 0.0, 1e-12);

  std::vector<double> shifted = phase;
  for (double& x : shifted) x += kPi / 2;
  const auto slave = FieldTrace::from_intensity_phase(times, intensity, shifted);
  EXPECT_NEAR(locked_phase_offset(master, slave, 0.0, 99e-12), kPi / 2, 1e-12);

  EXPECT_THROW(locked_phase_offset(master, slave, 200e-12, 300e-12), PreconditionError);
}

TEST(LockedPhaseOffset, InjectionLockedSlaveHoldsConstantPhase) {
  const LaserParams p;
  const SteadyState ss = steady_state(p, 1.5);
  IntegrateOptions opt;
  opt.initial_carrier = ss.carrier;
  opt.initial_field = std::sqrt(ss.photons);
  opt.frame_frequency = ss.frequency;
  const auto drive = DriveWaveform::constant(1.5, 4e-9, 1e-12);
  const FieldTrace master = integrate(p, drive, nullptr, 21, kDt, opt);
  const FieldTrace slave = integrate(p, drive, &master, 22, kDt, opt);

  const auto diff = phase_difference(master, slave, 2e-9, 4e-9);
  ASSERT_GT(diff.size(), 1000u);
  EXPECT_LT(stats::stddev(diff), 0.05);
  const double offset = locked_phase_offset(master, slave, 2e-9, 4e-9);
  EXPECT_GT(offset, -kPi);
  EXPECT_LE(offset, kPi);

  // Free-running lasers with different noise drift apart.
  const FieldTrace free_slave = integrate(p, drive, nullptr, 22, kDt, opt);
  const auto free_diff = phase_difference(master, free_slave, 2e-9, 4e-9);
  EXPECT_GT(stats::stddev(free_diff), stats::stddev(diff));
}

// Slave biased below threshold and gain-switched by a 100 ps current pulse.
struct GainSwitch {
  LaserParams params;
  DriveWaveform drive = DriveWaveform::constant(0.9, 300e-12, 1e-12);
  IntegrateOptions options;

  GainSwitch() {
    drive.set_level(50e-12, 150e-12, 3.0);
    options.initial_carrier = 0.9 * params.threshold_carrier();
    options.initial_field = std::complex<double>{};
  }

  // Phase at the intensity peak, relative to `reference` when given.
  double peak_phase(std::uint64_t seed, const FieldTrace* injection) const {
    const FieldTrace t = integrate(params, drive, injection, seed, kDt, options);
    std::size_t best = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.intensity(i) > t.intensity(best)) best = i;
    }
    EXPECT_TRUE(t.phase_defined(best));
    double phase = t.phase[best];
    if (injection != nullptr) phase -= std::arg(injection->threshold_frame_field(t.times[best]));
    return phase;
  }
};

TEST(GainSwitching, UnseededPulsePhasesAreUniform) {
  const GainSwitch gs;
  std::vector<double> phases;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) phases.push_back(gs.peak_phase(seed, nullptr));
  const auto chi = stats::chi_square_uniform_phase(phases, 20);
  EXPECT_GT(chi.p_value, 0.01);
}

TEST(GainSwitching, SeededPulsesInheritMasterPhase) {
  GainSwitch gs;
  const SteadyState master_ss = steady_state(gs.params, 1.5);
  // Master tuned onto the slave's threshold frequency.
  LaserParams master_params = gs.params;
  IntegrateOptions master_opt;
  master_opt.initial_carrier = master_ss.carrier;
  master_opt.initial_field = std::sqrt(master_ss.photons);
  master_opt.frame_frequency = master_ss.frequency;
  const auto master_drive = DriveWaveform::constant(1.5, 300e-12, 1e-12);
  const FieldTrace master = integrate(master_params, master_drive, nullptr, 5, kDt, master_opt);
  gs.params.detuning = -master_ss.frequency;

  std::vector<double> phases;
  for (std::uint64_t seed = 0; seed < 200; ++seed) phases.push_back(gs.peak_phase(seed, &master));
  double s = 0.0;
  double c = 0.0;
  for (double a : phases) {
    s += std::sin(a);
    c += std::cos(a);
  }
  const double resultant = std::hypot(s, c) / static_cast<double>(phases.size());
  EXPECT_GT(resultant, 0.9);
}

TEST(TraceCsv, HeaderAndRows) {
  std::vector<double> times{0.0, 1e-12};
  const std::vector<double> intensity{1.0, 4.0};
  const auto trace = FieldTrace::from_intensity_phase(times, intensity, {0.0, 0.5});
  std::ostringstream out;
  write_trace_csv(out, trace);
  EXPECT_EQ(out.str(), "time_s,intensity,carrier,phase_rad\n0,1,0,0\n1e-12,4,0,0.5\n");
}

}  // namespace
}  // namespace dpm::laser
