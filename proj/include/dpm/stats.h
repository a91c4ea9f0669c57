#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dpm::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

double mean(std::span<const double> x);
// Unbiased (n - 1) sample standard deviation.
double stddev(std::span<const double> x);

// Pearson chi-square test that `angles` (any real values, taken mod 2*pi) are
// uniform on [0, 2*pi), using `bins` equal-width bins.
TestResult chi_square_uniform_phase(std::span<const double> angles, int bins = 20);

// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
// uses the asymptotic Kolmogorov distribution with the small-sample
// correction of Stephens.
TestResult ks_test(std::span<const double> sample,
                   const std::function<double(double)>& cdf);

// CDF of the arcsine law on (0, 1): density 1 / (pi * sqrt(x (1 - x))).
double arcsine_cdf(double x);

// Circular mean of angles, in (-pi, pi].
double circular_mean(std::span<const double> angles);

// Wraps into [0, 2*pi).
double wrap_2pi(double angle);
// Wraps into (-pi, pi].
double wrap_pi(double angle);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
};

// Values outside [lo, hi] are clamped into the edge bins.
Histogram histogram(std::span<const double> x, double lo, double hi, std::size_t bins);

}  // namespace dpm::stats
