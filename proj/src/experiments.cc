#include "dpm/experiments.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "dpm/errors.h"
#include "dpm/io.h"
#include "dpm/random.h"
#include "json.hpp"

namespace dpm::experiments {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::pair<Experiment, std::string_view>, 5> kExperimentNames{{
    {Experiment::kPhaseVoltage, "phase_voltage"},
    {Experiment::kRandomization, "randomization"},
    {Experiment::kBb84Sweep, "bb84_sweep"},
    {Experiment::kDpsSweep, "dps_sweep"},
    {Experiment::kStability, "stability"},
}};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a finite number, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    // Accept integral values written in exponent form, e.g. 1e7.
    const double d = parse_double(key, t);
    if (d < 0.0 || d != std::floor(d) || d > 9.2e18) {
      throw ConfigError(key, "expected a non-negative integer, got '" + t + "'");
    }
    return static_cast<std::uint64_t>(d);
  }
  return v;
}

bool parse_bool(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + t + "'");
}

std::vector<double> parse_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += io::format_double(v[i]);
  }
  return s;
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Field> fields_of(ExperimentConfig& c) {
  std::vector<Field> f;
  auto num = [&f](std::string key, double& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_double(key, v); },
                 [&ref] { return io::format_double(ref); }});
  };
  auto uint = [&f](std::string key, std::uint64_t& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_uint(key, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto size = [&f](std::string key, std::size_t& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_uint(key, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto integer = [&f](std::string key, int& ref) {
    f.push_back({key,
                 [&ref, key](const std::string& v) {
                   const std::uint64_t u = parse_uint(key, v);
                   if (u > 1u << 30) throw ConfigError(key, "value too large");
                   ref = static_cast<int>(u);
                 },
                 [&ref] { return std::to_string(ref); }});
  };
  auto flag = [&f](std::string key, bool& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_bool(key, v); },
                 [&ref] { return std::string(ref ? "true" : "false"); }});
  };
  auto list = [&f](std::string key, std::vector<double>& ref) {
    f.push_back({key, [&ref, key](const std::string& v) { ref = parse_list(key, v); },
                 [&ref] { return format_list(ref); }});
  };

  f.push_back({"experiment",
               [&c](const std::string& v) { c.experiment = experiment_from_string(trim(v)); },
               [&c] { return std::string(to_string(c.experiment)); }});
  uint("rng_seed", c.rng_seed);
  uint("trials", c.trials);
  list("losses", c.losses);
  f.push_back({"output_path", [&c](const std::string& v) { c.output_path = trim(v); },
               [&c] { return c.output_path; }});

  num("source.clock_rate", c.source.clock_rate);
  num("source.pulse_width", c.source.pulse_width);
  num("source.wavelength", c.source.wavelength);
  num("source.halfwave_voltage", c.source.halfwave_voltage);
  num("source.perturbation_duration", c.source.perturbation_duration);
  integer("source.block_length", c.source.block_length);
  num("source.mean_photon_number", c.source.mean_photon_number);
  flag("source.randomize_blocks", c.randomize_blocks);

  num("channel.loss_db", c.channel.loss_db);
  num("channel.loss_per_km", c.channel.loss_per_km);

  num("mzi.delay", c.mzi.delay);
  num("mzi.internal_phase", c.mzi.internal_phase);
  num("mzi.insertion_loss_db", c.mzi.insertion_loss_db);
  num("mzi.visibility", c.mzi.visibility);

  num("detector.efficiency", c.detector.efficiency);
  num("detector.dark_rate", c.detector.dark_rate);
  num("detector.gate_width", c.detector.gate_width);
  num("detector.gate_period", c.detector.gate_period);

  num("laser.carrier_lifetime", c.laser.carrier_lifetime);
  num("laser.photon_lifetime", c.laser.photon_lifetime);
  num("laser.gain_slope", c.laser.gain_slope);
  num("laser.transparency_carrier", c.laser.transparency_carrier);
  num("laser.gain_compression", c.laser.gain_compression);
  num("laser.linewidth_enhancement", c.laser.linewidth_enhancement);
  num("laser.spontaneous_fraction", c.laser.spontaneous_fraction);
  num("laser.injection_coupling", c.laser.injection_coupling);
  num("laser.threshold_current", c.laser.threshold_current);
  num("laser.detuning", c.laser.detuning);

  num("keyrate.decoy_nu", c.decoy_nu);
  num("keyrate.f_ec", c.f_ec);

  list("phase_voltage.voltages", c.phase_voltage.voltages);
  flag("phase_voltage.physical", c.phase_voltage.physical);
  num("phase_voltage.bias", c.phase_voltage.bias);
  num("phase_voltage.dt", c.phase_voltage.dt);
  num("phase_voltage.settle", c.phase_voltage.settle);
  num("phase_voltage.tail", c.phase_voltage.tail);
  num("phase_voltage.calibration_step", c.phase_voltage.calibration_step);
  flag("phase_voltage.noise", c.phase_voltage.noise);

  num("randomization.symbol_phase", c.randomization.symbol_phase);
  size("randomization.histogram_bins", c.randomization.histogram_bins);

  f.push_back({"sweep.method",
               [&c](const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "event") {
                   c.sweep.method = McMethod::kEvent;
                 } else if (t == "pipeline") {
                   c.sweep.method = McMethod::kPipeline;
                 } else {
                   throw ConfigError("sweep.method", "expected event or pipeline, got '" + t + "'");
                 }
               },
               [&c] {
                 return std::string(c.sweep.method == McMethod::kEvent ? "event" : "pipeline");
               }});
  uint("sweep.min_sifted", c.sweep.min_sifted);

  num("stability.duration", c.stability.duration);
  num("stability.integration_time", c.stability.integration_time);
  num("stability.sifted_rate_bps", c.stability.sifted_rate_bps);
  num("stability.true_qber", c.stability.true_qber);
  size("stability.histogram_bins", c.stability.histogram_bins);
  return f;
}

std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<int>(std::round((hi - lo) / step));
  for (int i = 0; i <= n; ++i) v.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  return v;
}

// Turns a module PreconditionError ("group.field: message") into a ConfigError.
template <typename F>
void check(F&& validate) {
  try {
    validate();
  } catch (const PreconditionError& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    if (colon == std::string::npos) throw ConfigError("config", what);
    throw ConfigError(what.substr(0, colon), trim(what.substr(colon + 1)));
  }
}

Json config_json(const ExperimentConfig& config) {
  Json j = Json::object();
  for (const auto& [k, v] : resolved_entries(config)) j[k] = v;
  return j;
}

void write_config_comment(std::ostream& out, const ExperimentConfig& config) {
  for (const auto& [k, v] : resolved_entries(config)) out << "# " << k << " = " << v << '\n';
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [exp, name] : kExperimentNames) {
    if (exp == e) return name;
  }
  return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
  for (const auto& [exp, n] : kExperimentNames) {
    if (n == name) return exp;
  }
  throw ConfigError("experiment", "unknown experiment '" + std::string(name) + "'");
}

void StabilityConfig::validate() const {
  if (!(duration > 0.0)) throw ConfigError("stability.duration", "must be positive");
  if (!(integration_time > 0.0 && integration_time <= duration)) {
    throw ConfigError("stability.integration_time", "must be positive and at most duration");
  }
  if (!(sifted_rate_bps > 0.0)) throw ConfigError("stability.sifted_rate_bps", "must be positive");
  if (sifted_per_bin() < 1) {
    throw ConfigError("stability.sifted_rate_bps", "gives no sifted bits per integration bin");
  }
  if (!(true_qber >= 0.0 && true_qber <= 1.0)) {
    throw ConfigError("stability.true_qber", "must lie in [0, 1]");
  }
  if (histogram_bins < 1) throw ConfigError("stability.histogram_bins", "must be at least 1");
}

std::uint64_t StabilityConfig::bins() const {
  return static_cast<std::uint64_t>(std::floor(duration / integration_time + 1e-9));
}

std::uint64_t StabilityConfig::sifted_per_bin() const {
  return static_cast<std::uint64_t>(std::llround(sifted_rate_bps * integration_time));
}

void ExperimentConfig::validate() const {
  check([&] { source.validate(); });
  check([&] { channel.validate(); });
  check([&] { mzi.validate(); });
  check([&] { detector.validate(); });
  check([&] { laser.validate(); });
  if (trials < 1) throw ConfigError("trials", "must be at least 1");
  if (output_path.empty()) throw ConfigError("output_path", "must not be empty");
  if (!(f_ec >= 1.0)) throw ConfigError("keyrate.f_ec", "must be at least 1");
  switch (experiment) {
    case Experiment::kPhaseVoltage:
      if (phase_voltage.voltages.empty()) {
        throw ConfigError("phase_voltage.voltages", "must list at least one voltage");
      }
      if (phase_voltage.physical) {
        if (!(phase_voltage.dt > 0.0 && phase_voltage.dt <= laser.photon_lifetime / 10.0)) {
          throw ConfigError("phase_voltage.dt", "must be positive and at most photon_lifetime/10");
        }
        if (!(phase_voltage.bias > laser.threshold_current)) {
          throw ConfigError("phase_voltage.bias", "must be above threshold_current");
        }
        if (!(phase_voltage.settle > 0.0 && phase_voltage.tail > 0.0)) {
          throw ConfigError("phase_voltage.settle", "settle and tail must be positive");
        }
        if (!(phase_voltage.calibration_step > 0.0)) {
          throw ConfigError("phase_voltage.calibration_step", "must be positive");
        }
      }
      break;
    case Experiment::kRandomization:
      if (source.block_length != 2) {
        throw ConfigError("source.block_length", "randomization needs block_length 2");
      }
      if (!(mzi.visibility > 0.0)) throw ConfigError("mzi.visibility", "must be positive");
      check([&] { optics::delay_slots(mzi, source.slot_period()); });
      if (randomization.histogram_bins < 1) {
        throw ConfigError("randomization.histogram_bins", "must be at least 1");
      }
      break;
    case Experiment::kBb84Sweep:
    case Experiment::kDpsSweep: {
      if (losses.empty()) throw ConfigError("losses", "must list at least one loss");
      for (std::size_t i = 0; i < losses.size(); ++i) {
        if (losses[i] < 0.0) throw ConfigError("losses", "must be non-negative");
        if (i > 0 && losses[i] <= losses[i - 1]) throw ConfigError("losses", "must be increasing");
      }
      if (!(decoy_nu > 0.0 && decoy_nu < protocol::signal_mean_photons(link_setup()))) {
        throw ConfigError("keyrate.decoy_nu", "must lie strictly between 0 and the signal mean");
      }
      check([&] {
        try {
          // Validates protocol-specific structure (block length, delay).
          protocol::simulate_events(link_setup(), experiment == Experiment::kBb84Sweep
                                                      ? 2
                                                      : source.block_length,
                                    0);
        } catch (const PreconditionError& e) {
          throw PreconditionError(std::string("source.block_length: ") + e.what());
        }
      });
      break;
    }
    case Experiment::kStability:
      stability.validate();
      break;
  }
}

protocol::LinkSetup ExperimentConfig::link_setup() const {
  protocol::LinkSetup s;
  s.protocol = experiment == Experiment::kDpsSweep ? protocol::Protocol::kDps
                                                   : protocol::Protocol::kBb84;
  s.source = source;
  s.channel = channel;
  s.mzi = mzi;
  s.detector = detector;
  s.randomize_blocks = randomize_blocks;
  return s;
}

keyrate::KeyRateSettings ExperimentConfig::keyrate_settings() const {
  keyrate::KeyRateSettings k;
  k.decoy_nu = decoy_nu;
  k.f_ec = f_ec;
  return k;
}

ExperimentConfig default_config(Experiment experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::kPhaseVoltage:
      c.phase_voltage.voltages = arange(-0.5, 0.5, 0.05);
      c.trials = 1;
      break;
    case Experiment::kRandomization:
      c.source.block_length = 2;
      c.randomize_blocks = true;
      c.mzi.visibility = 0.99;
      c.trials = 10'000;
      break;
    case Experiment::kBb84Sweep:
    case Experiment::kDpsSweep: {
      const auto setup = protocol::default_setup(experiment == Experiment::kBb84Sweep
                                                     ? protocol::Protocol::kBb84
                                                     : protocol::Protocol::kDps);
      c.source = setup.source;
      c.randomize_blocks = setup.randomize_blocks;
      c.mzi = setup.mzi;
      c.detector = setup.detector;
      c.losses = arange(0.0, 50.0, 2.0);
      c.trials = 10'000'000;
      break;
    }
    case Experiment::kStability:
      c.trials = 1;
      break;
  }
  return c;
}

ExperimentConfig parse_config(std::istream& in, std::optional<Experiment> fallback) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  std::optional<Experiment> selected;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    if (seen[key]++ > 0) throw ConfigError(key, "given more than once");
    if (key == "experiment") selected = experiment_from_string(value);
    entries.emplace_back(std::move(key), std::move(value));
  }
  if (!selected) selected = fallback;
  if (!selected) throw ConfigError("experiment", "missing");
  if (fallback && *selected != *fallback) {
    throw ConfigError("experiment", "config selects '" + std::string(to_string(*selected)) +
                                        "' but '" + std::string(to_string(*fallback)) +
                                        "' was requested");
  }

  ExperimentConfig config = default_config(*selected);
  const auto fields = fields_of(config);
  for (const auto& [key, value] : entries) {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const Field& f) { return f.key == key; });
    if (it == fields.end()) throw ConfigError(key, "unknown key");
    it->set(value);
  }
  config.validate();
  return config;
}

std::vector<std::pair<std::string, std::string>> resolved_entries(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields_of(copy)) out.emplace_back(f.key, f.get());
  return out;
}

// ---- phase vs voltage ------------------------------------------------------

double physical_phase_step(const ExperimentConfig& config, double delta_drive) {
  const auto& pv = config.phase_voltage;
  laser::LaserParams params = config.laser;
  if (!pv.noise) params.spontaneous_fraction = 0.0;
  const double t_m = config.source.perturbation_duration;
  const double duration = pv.settle + t_m + pv.tail;

  const laser::SteadyState ss = laser::steady_state(params, pv.bias);
  laser::IntegrateOptions options;
  options.initial_carrier = ss.carrier;
  options.initial_field = std::sqrt(ss.photons);
  options.frame_frequency = ss.frequency;

  const auto base = laser::DriveWaveform::constant(pv.bias, duration, pv.dt);
  auto perturbed = base;
  perturbed.set_level(pv.settle - 0.5 * pv.dt, pv.settle + t_m - 0.5 * pv.dt, pv.bias + delta_drive);

  const auto a = laser::integrate(params, base, nullptr, config.rng_seed, pv.dt, options);
  const auto b = laser::integrate(params, perturbed, nullptr, config.rng_seed, pv.dt, options);
  return b.phase.back() - a.phase.back();
}

PhaseVoltageResult run_phase_voltage(const ExperimentConfig& config) {
  config.validate();
  PhaseVoltageResult result;
  if (config.phase_voltage.physical) {
    const double step = config.phase_voltage.calibration_step;
    const double slope =
        (physical_phase_step(config, step) - physical_phase_step(config, -step)) / (2.0 * step);
    if (!(std::abs(slope) > 0.0)) {
      throw IntegrationDiverged(0, "phase_voltage: laser model shows no phase response");
    }
    result.drive_per_volt = std::numbers::pi / (config.source.halfwave_voltage * slope);
  }
  for (double v : config.phase_voltage.voltages) {
    PhaseVoltageRow row;
    row.voltage = v;
    row.chirp_hz = source::voltage_to_chirp(v, config.source);
    row.encoder_phase = source::chirp_to_phase(row.chirp_hz, config.source.perturbation_duration);
    if (result.drive_per_volt) {
      row.physical_phase = physical_phase_step(config, v * *result.drive_per_volt);
    }
    result.rows.push_back(row);
  }
  return result;
}

// ---- randomization ---------------------------------------------------------

RandomizationResult run_randomization(const ExperimentConfig& config) {
  config.validate();
  // One extra pair so that both intra- and cross-block samples number `trials`.
  const std::size_t pairs = config.trials + 1;
  std::vector<double> phases;
  phases.reserve(2 * pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    phases.push_back(0.0);
    phases.push_back(config.randomization.symbol_phase);
  }
  const auto train =
      source::emit_train(config.source, phases, config.randomize_blocks, config.rng_seed);
  const auto out = optics::interfere(train, config.mzi);

  const double v = config.mzi.visibility;
  const double floor = 0.5 * (1.0 - v);
  RandomizationResult r;
  std::vector<double> intra_port0;
  for (const auto& p : out) {
    const double share = (p.port0 / (p.port0 + p.port1) - floor) / v;
    if (p.slot % 2 == 1) {
      r.intra_block.push_back(share);
      intra_port0.push_back(p.port0);
    } else {
      r.cross_block.push_back(share);
    }
  }
  const double m = stats::mean(intra_port0);
  r.intra_std_over_mean = intra_port0.size() >= 2 && m > 0.0 ? stats::stddev(intra_port0) / m : 0.0;
  r.cross_ks = stats::ks_test(r.cross_block, stats::arcsine_cdf);
  r.intra_ks = stats::ks_test(r.intra_block, stats::arcsine_cdf);
  const std::size_t bins = config.randomization.histogram_bins;
  r.intra_histogram = stats::histogram(r.intra_block, 0.0, 1.0, bins);
  r.cross_histogram = stats::histogram(r.cross_block, 0.0, 1.0, bins);
  return r;
}

// ---- loss sweeps -----------------------------------------------------------

std::uint64_t sweep_slots(const ExperimentConfig& config, double loss_db) {
  auto setup = config.link_setup();
  setup.channel.loss_db = loss_db;
  const auto gq = protocol::expected_gain_qber(setup.protocol, protocol::signal_mean_photons(setup),
                                               setup.channel, setup.mzi, setup.detector);
  const bool bb84 = setup.protocol == protocol::Protocol::kBb84;
  const double b = setup.source.block_length;
  const double sifted_per_slot = bb84 ? 0.25 * gq.gain : gq.gain * (b - 1.0) / b;
  double needed = static_cast<double>(config.trials);
  if (sifted_per_slot > 0.0) {
    needed = std::max(needed, static_cast<double>(config.sweep.min_sifted) / sifted_per_slot);
  }
  needed = std::min(needed, 0x1.0p62);
  std::uint64_t grain = bb84 ? 2 : static_cast<std::uint64_t>(setup.source.block_length);
  if (config.sweep.method == McMethod::kPipeline) grain = std::lcm(grain, std::uint64_t{1} << 16);
  const auto slots = static_cast<std::uint64_t>(std::ceil(needed));
  return (slots + grain - 1) / grain * grain;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.experiment != Experiment::kBb84Sweep && config.experiment != Experiment::kDpsSweep) {
    throw ConfigError("experiment", "run_sweep needs bb84_sweep or dps_sweep");
  }
  const auto keyrate_settings = config.keyrate_settings();
  std::vector<SweepRow> rows;
  for (double loss : config.losses) {
    auto setup = config.link_setup();
    setup.channel.loss_db = loss;
    SweepRow row;
    row.analytic = keyrate::rate_point(setup, keyrate_settings);
    row.analytic_gain_qber = protocol::expected_gain_qber(
        setup.protocol, protocol::signal_mean_photons(setup), setup.channel, setup.mzi,
        setup.detector);
    row.slots = sweep_slots(config, loss);
    // Seeded by the loss value so that equal losses reproduce bit-for-bit.
    row.seed = derive_seed(config.rng_seed, std::bit_cast<std::uint64_t>(loss));
    row.mc = config.sweep.method == McMethod::kEvent
                 ? protocol::simulate_events(setup, row.slots, row.seed)
                 : protocol::simulate_pipeline(setup, row.slots, row.seed);
    rows.push_back(row);
  }
  return rows;
}

// ---- stability -------------------------------------------------------------

StabilityResult run_stability(const StabilityConfig& config, std::uint64_t rng_seed) {
  config.validate();
  const std::uint64_t n = config.sifted_per_bin();
  const double nd = static_cast<double>(n);
  StabilityResult r;
  r.qber.reserve(config.bins());
  Rng rng(rng_seed);
  std::binomial_distribution<std::uint64_t> errors(n, config.true_qber);
  for (std::uint64_t i = 0; i < config.bins(); ++i) {
    r.qber.push_back(static_cast<double>(errors(rng)) / nd);
  }
  r.mean = stats::mean(r.qber);
  r.stddev = r.qber.size() >= 2 ? stats::stddev(r.qber) : 0.0;
  const double e = config.true_qber;
  r.model_stddev = std::sqrt(e * (1.0 - e) / nd);

  const double half_width = std::max(5.0 * r.model_stddev, 1.0 / nd);
  r.histogram = stats::histogram(r.qber, e - half_width, e + half_width, config.histogram_bins);
  const double total = static_cast<double>(r.qber.size());
  auto normal_cdf = [&](double x) {
    if (r.model_stddev == 0.0) return x >= e ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(x - e) / (r.model_stddev * std::numbers::sqrt2));
  };
  for (std::size_t i = 0; i < r.histogram.counts.size(); ++i) {
    const double lo = r.histogram.lo + static_cast<double>(i) * r.histogram.bin_width();
    r.model_counts.push_back(total * (normal_cdf(lo + r.histogram.bin_width()) - normal_cdf(lo)));
  }
  return r;
}

// ---- output ----------------------------------------------------------------

void write_phase_voltage(std::ostream& out, const ExperimentConfig& config,
                         const PhaseVoltageResult& result) {
  write_config_comment(out, config);
  io::CsvWriter csv(out);
  csv.field("voltage_v").field("chirp_hz").field("encoder_phase_rad").field("physical_phase_rad");
  csv.end_row();
  for (const auto& row : result.rows) {
    csv.field(row.voltage).field(row.chirp_hz).field(row.encoder_phase);
    if (row.physical_phase) {
      csv.field(*row.physical_phase);
    } else {
      csv.field(std::string_view("nan"));
    }
    csv.end_row();
  }
}

void write_sweep_csv(std::ostream& out, const ExperimentConfig& config,
                     const std::vector<SweepRow>& rows) {
  write_config_comment(out, config);
  io::CsvWriter csv(out);
  for (const char* h : {"loss_db", "sifted_rate_bps", "qber", "secure_rate_bps", "analytic_gain",
                        "mc_slots", "mc_seed", "mc_signals", "mc_clicked", "mc_gain",
                        "mc_gain_stderr", "mc_sifted", "mc_errors", "mc_qber", "mc_qber_stderr",
                        "mc_sifted_rate_bps"}) {
    csv.field(std::string_view(h));
  }
  csv.end_row();
  for (const auto& r : rows) {
    csv.field(r.analytic.loss_db).field(r.analytic.sifted_rate_bps).field(r.analytic.qber)
        .field(r.analytic.secure_rate_bps).field(r.analytic_gain_qber.gain).field(r.slots)
        .field(r.seed).field(r.mc.signals).field(r.mc.clicked).field(r.mc.gain())
        .field(r.mc.gain_stderr()).field(r.mc.sift.sifted_count).field(r.mc.sift.error_count)
        .field(r.mc.sift.qber).field(r.mc.qber_stderr()).field(r.mc.sift.sifted_rate);
    csv.end_row();
  }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out.imbue(std::locale::classic());
  return out;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::vector<std::filesystem::path> run_and_write(const ExperimentConfig& config,
                                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string name(to_string(config.experiment));
  std::vector<std::filesystem::path> written;
  Json summary;
  summary["experiment"] = name;
  summary["rng_seed"] = config.rng_seed;
  summary["config"] = config_json(config);

  switch (config.experiment) {
    case Experiment::kPhaseVoltage: {
      const auto result = run_phase_voltage(config);
      const auto csv_path = dir / "phase_voltage.csv";
      auto out = open_output(csv_path);
      write_phase_voltage(out, config, result);
      written.push_back(csv_path);
      if (result.drive_per_volt) summary["drive_per_volt"] = *result.drive_per_volt;
      summary["halfwave_voltage"] = config.source.halfwave_voltage;
      summary["chirp_per_volt_hz"] = source::voltage_to_chirp(1.0, config.source);
      break;
    }
    case Experiment::kRandomization: {
      const auto r = run_randomization(config);
      const auto csv_path = dir / "randomization_histogram.csv";
      auto out = open_output(csv_path);
      write_config_comment(out, config);
      io::CsvWriter csv(out);
      csv.field("bin_center").field("intra_block_count").field("cross_block_count")
          .field("arcsine_expected").end_row();
      const auto& h = r.cross_histogram;
      for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double lo = h.lo + static_cast<double>(i) * h.bin_width();
        const double expected = static_cast<double>(r.cross_block.size()) *
                                (stats::arcsine_cdf(lo + h.bin_width()) - stats::arcsine_cdf(lo));
        csv.field(h.bin_center(i)).field(r.intra_histogram.counts[i]).field(h.counts[i])
            .field(expected);
        csv.end_row();
      }
      written.push_back(csv_path);
      summary["intra_block_count"] = r.intra_block.size();
      summary["cross_block_count"] = r.cross_block.size();
      summary["intra_std_over_mean"] = r.intra_std_over_mean;
      summary["cross_ks_statistic"] = r.cross_ks.statistic;
      summary["cross_ks_p_value"] = r.cross_ks.p_value;
      summary["intra_ks_statistic"] = r.intra_ks.statistic;
      summary["intra_ks_p_value"] = r.intra_ks.p_value;
      break;
    }
    case Experiment::kBb84Sweep:
    case Experiment::kDpsSweep: {
      const auto rows = run_sweep(config);
      const auto csv_path = dir / (name + ".csv");
      auto out = open_output(csv_path);
      write_sweep_csv(out, config, rows);
      written.push_back(csv_path);
      Json points = Json::array();
      for (const auto& r : rows) {
        Json p;
        p["protocol"] = protocol::to_string(config.link_setup().protocol);
        p["loss_db"] = r.analytic.loss_db;
        p["sifted_count"] = r.mc.sift.sifted_count;
        p["error_count"] = r.mc.sift.error_count;
        p["qber"] = r.mc.sift.qber;
        p["sifted_rate_bps"] = r.mc.sift.sifted_rate;
        p["slots"] = r.slots;
        p["seed"] = r.seed;
        p["analytic_qber"] = r.analytic.qber;
        p["analytic_sifted_rate_bps"] = r.analytic.sifted_rate_bps;
        p["secure_rate_bps"] = r.analytic.secure_rate_bps;
        points.push_back(p);
      }
      summary["points"] = points;
      break;
    }
    case Experiment::kStability: {
      const auto r = run_stability(config.stability, config.rng_seed);
      const auto series_path = dir / "stability_series.csv";
      {
        auto out = open_output(series_path);
        write_config_comment(out, config);
        io::CsvWriter csv(out);
        csv.field("time_s").field("qber").end_row();
        for (std::size_t i = 0; i < r.qber.size(); ++i) {
          csv.field(static_cast<double>(i + 1) * config.stability.integration_time)
              .field(r.qber[i]);
          csv.end_row();
        }
      }
      const auto hist_path = dir / "stability_histogram.csv";
      {
        auto out = open_output(hist_path);
        write_config_comment(out, config);
        io::CsvWriter csv(out);
        csv.field("qber").field("count").field("model_count").end_row();
        for (std::size_t i = 0; i < r.histogram.counts.size(); ++i) {
          csv.field(r.histogram.bin_center(i)).field(r.histogram.counts[i])
              .field(r.model_counts[i]);
          csv.end_row();
        }
      }
      written.push_back(series_path);
      written.push_back(hist_path);
      summary["bins"] = r.qber.size();
      summary["sifted_per_bin"] = config.stability.sifted_per_bin();
      summary["mean_qber"] = r.mean;
      summary["stddev_qber"] = r.stddev;
      summary["model_stddev_qber"] = r.model_stddev;
      break;
    }
  }
  const auto json_path = dir / (name + ".json");
  write_json(json_path, summary);
  written.push_back(json_path);
  return written;
}

}  // namespace dpm::experiments
