#include "dpm/stats.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/arcsine.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "dpm/errors.h"

namespace dpm::stats {

double mean(std::span<const double> x) {
  require(!x.empty(), "mean of empty sample");
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  require(x.size() >= 2, "stddev needs at least two samples");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double wrap_2pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

double wrap_pi(double angle) {
  double r = wrap_2pi(angle);
  if (r > std::numbers::pi) r -= 2.0 * std::numbers::pi;
  return r;
}

TestResult chi_square_uniform_phase(std::span<const double> angles, int bins) {
  require(bins >= 2, "chi-square needs at least two bins");
  require(angles.size() >= static_cast<std::size_t>(5 * bins),
          "chi-square needs at least 5 expected counts per bin");
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double a : angles) {
    auto k = static_cast<std::size_t>(wrap_2pi(a) / (2.0 * std::numbers::pi) * bins);
    counts[std::min(k, counts.size() - 1)] += 1.0;
  }
  const double expected = static_cast<double>(angles.size()) / bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(bins - 1);
  return {chi2, boost::math::cdf(boost::math::complement(dist, chi2))};
}

namespace {

// Complementary Kolmogorov distribution Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

TestResult ks_test(std::span<const double> sample,
                   const std::function<double(double)>& cdf) {
  require(!sample.empty(), "KS test of empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sqrt_n = std::sqrt(n);
  return {d, kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

double arcsine_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::cdf(boost::math::arcsine_distribution<double>(0.0, 1.0), x);
}

double circular_mean(std::span<const double> angles) {
  require(!angles.empty(), "circular mean of empty sample");
  double s = 0.0;
  double c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  const double m = std::atan2(s, c);
  return m == -std::numbers::pi ? std::numbers::pi : m;
}

Histogram histogram(std::span<const double> x, double lo, double hi, std::size_t bins) {
  require(hi > lo && bins > 0, "histogram needs hi > lo and bins > 0");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  for (double v : x) {
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    const auto k = static_cast<std::ptrdiff_t>(std::floor(pos));
    h.counts[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, bins - 1))]++;
  }
  return h;
}

}  // namespace dpm::stats
