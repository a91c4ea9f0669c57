#pragma once

// Secure key rates: vacuum + weak decoy BB84 bound and a pluggable DPS
// secure-fraction formula.

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dpm/protocol.h"

namespace dpm::keyrate {

double binary_entropy(double x);

struct DecoyInputs {
  double mu = 0.5;
  double nu = 0.1;
  double q_mu = 0.0;
  double q_nu = 0.0;
  double e_mu = 0.0;
  double e_nu = 0.0;
  double y0 = 0.0;
  double f_ec = 1.16;
  double sift_factor = 0.5;

  void validate() const;
};

struct DecoyBound {
  double y1_lower = 0.0;
  double e1_upper = 0.0;
  double q1 = 0.0;
  double rate = 0.0;  // secure bits per signal, clamped at 0
  // Set when Y1 <= 0 or e1 > 1/2; rate is then 0.
  bool degenerate = false;
};

DecoyBound decoy_bb84_bound(const DecoyInputs& in);
double decoy_bb84_rate(const DecoyInputs& in);

// Secure bits per detected signal before clamping, as a function of
// (qber, mu, f_ec).
using DpsSecureFraction = std::function<double(double qber, double mu, double f_ec)>;

// Individual-attack bound for DPS: (1 - 2 mu) tau(e) - f h(e), where
// tau(e) = -log2(1 - e^2 - (1 - 6e)^2 / 2) is the collision-probability
// privacy-amplification term and 2 mu covers beam-splitting.
double dps_individual_attack_fraction(double qber, double mu, double f_ec);

// gain * max(0, formula(qber, mu, f_ec)); zero once qber reaches 1/6.
double dps_rate(double gain, double qber, double mu, double f_ec,
                const DpsSecureFraction& formula = dps_individual_attack_fraction);

struct KeyRateSettings {
  double decoy_nu = 0.1;  // per signal, same units as the signal mu
  double f_ec = 1.16;
  DpsSecureFraction dps_formula = dps_individual_attack_fraction;
};

struct RatePoint {
  double loss_db = 0.0;
  double sifted_rate_bps = 0.0;
  double qber = 0.0;
  double secure_rate_bps = 0.0;
};

// Analytic curve from expected_gain_qber; the channel loss of `setup` is
// replaced by each entry of `losses`.
std::vector<RatePoint> rate_curve(const protocol::LinkSetup& setup,
                                  std::span<const double> losses,
                                  const KeyRateSettings& settings = {});

RatePoint rate_point(const protocol::LinkSetup& setup, const KeyRateSettings& settings = {});

// CSV with header loss_db,sifted_rate_bps,qber,secure_rate_bps.
void write_rate_curve_csv(std::ostream& out, std::span<const RatePoint> curve);

}  // namespace dpm::keyrate
