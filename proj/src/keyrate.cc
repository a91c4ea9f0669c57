#include "dpm/keyrate.h"

#include <cmath>
#include <ostream>

#include "dpm/errors.h"
#include "dpm/io.h"

namespace dpm::keyrate {

double binary_entropy(double x) {
  require(x >= 0.0 && x <= 1.0, "binary_entropy: argument must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

void DecoyInputs::validate() const {
  require(nu > 0.0 && nu < mu, "DecoyInputs: need 0 < nu < mu");
  for (double v : {q_mu, q_nu, e_mu, e_nu, y0}) {
    require(v >= 0.0 && v <= 1.0, "DecoyInputs: gains, QBERs and Y0 must lie in [0, 1]");
  }
  require(f_ec >= 1.0, "DecoyInputs: f_ec must be at least 1");
  require(sift_factor > 0.0 && sift_factor <= 1.0, "DecoyInputs: sift_factor must lie in (0, 1]");
}

DecoyBound decoy_bb84_bound(const DecoyInputs& in) {
  in.validate();
  const double mu = in.mu;
  const double nu = in.nu;
  DecoyBound b;
  b.y1_lower = mu / (mu * nu - nu * nu) *
               (in.q_nu * std::exp(nu) - in.q_mu * std::exp(mu) * nu * nu / (mu * mu) -
                (mu * mu - nu * nu) / (mu * mu) * in.y0);
  if (b.y1_lower <= 0.0) {
    b.degenerate = true;
    return b;
  }
  b.e1_upper = (in.e_nu * in.q_nu * std::exp(nu) - 0.5 * in.y0) / (b.y1_lower * nu);
  b.q1 = b.y1_lower * mu * std::exp(-mu);
  if (b.e1_upper > 0.5) {
    b.degenerate = true;
    return b;
  }
  const double e1 = std::max(b.e1_upper, 0.0);
  const double r = -in.q_mu * in.f_ec * binary_entropy(in.e_mu) + b.q1 * (1.0 - binary_entropy(e1));
  b.rate = in.sift_factor * std::max(0.0, r);
  return b;
}

double decoy_bb84_rate(const DecoyInputs& in) { return decoy_bb84_bound(in).rate; }

double dps_individual_attack_fraction(double qber, double mu, double f_ec) {
  const double e = qber;
  const double collision = 1.0 - e * e - 0.5 * (1.0 - 6.0 * e) * (1.0 - 6.0 * e);
  const double tau = -std::log2(collision);
  return (1.0 - 2.0 * mu) * tau - f_ec * binary_entropy(e);
}

double dps_rate(double gain, double qber, double mu, double f_ec,
                const DpsSecureFraction& formula) {
  require(qber >= 0.0 && qber <= 0.5, "dps_rate: qber must lie in [0, 1/2]");
  require(gain >= 0.0 && gain <= 1.0, "dps_rate: gain must lie in [0, 1]");
  require(mu >= 0.0 && f_ec >= 1.0, "dps_rate: need mu >= 0 and f_ec >= 1");
  // The collision-probability term turns over at e = 6/38; well past any
  // positive-rate region, so the rate is pinned to zero from 1/6 on.
  if (qber >= 1.0 / 6.0) return 0.0;
  return gain * std::max(0.0, formula(qber, mu, f_ec));
}

RatePoint rate_point(const protocol::LinkSetup& setup, const KeyRateSettings& settings) {
  const double mu = protocol::signal_mean_photons(setup);
  const auto gq = protocol::expected_gain_qber(setup.protocol, mu, setup.channel, setup.mzi,
                                               setup.detector);
  RatePoint p;
  p.loss_db = setup.channel.loss_db;
  p.qber = gq.qber;
  const double clock = protocol::sifting_clock(setup);
  p.sifted_rate_bps = clock * gq.gain;
  if (setup.protocol == protocol::Protocol::kBb84) {
    const auto decoy = protocol::expected_gain_qber(setup.protocol, settings.decoy_nu,
                                                    setup.channel, setup.mzi, setup.detector);
    DecoyInputs in;
    in.mu = mu;
    in.nu = settings.decoy_nu;
    in.q_mu = gq.gain;
    in.q_nu = decoy.gain;
    in.e_mu = gq.qber;
    in.e_nu = decoy.qber;
    in.y0 = protocol::vacuum_yield(setup.detector);
    in.f_ec = settings.f_ec;
    // Rate per pair-signal; the basis factor is already in the sifting clock.
    in.sift_factor = 1.0;
    p.secure_rate_bps = clock * decoy_bb84_rate(in);
  } else {
    p.secure_rate_bps =
        clock * dps_rate(gq.gain, gq.qber, mu, settings.f_ec, settings.dps_formula);
  }
  return p;
}

std::vector<RatePoint> rate_curve(const protocol::LinkSetup& setup,
                                  std::span<const double> losses,
                                  const KeyRateSettings& settings) {
  std::vector<RatePoint> out;
  out.reserve(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    require(losses[i] >= 0.0, "rate_curve: losses must be non-negative");
    require(i == 0 || losses[i] > losses[i - 1], "rate_curve: losses must be increasing");
    protocol::LinkSetup s = setup;
    s.channel.loss_db = losses[i];
    out.push_back(rate_point(s, settings));
  }
  return out;
}

void write_rate_curve_csv(std::ostream& out, std::span<const RatePoint> curve) {
  io::CsvWriter csv(out);
  csv.field("loss_db").field("sifted_rate_bps").field("qber").field("secure_rate_bps").end_row();
  for (const auto& p : curve) {
    csv.field(p.loss_db).field(p.sifted_rate_bps).field(p.qber).field(p.secure_rate_bps);
    csv.end_row();
  }
}

}  // namespace dpm::keyrate
