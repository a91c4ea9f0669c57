#include "dpm/stats.h"

#include <cmath>
#include <numbers>
#include <random>

#include "dpm/errors.h"
#include "gtest/gtest.h"

namespace dpm::stats {
namespace {

TEST(Stats, MeanAndStddev) {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_NEAR(stddev(x), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_THROW(mean(std::vector<double>{}), PreconditionError);
}

TEST(Stats, WrapConventions) {
  const double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(wrap_2pi(-0.5 * pi), 1.5 * pi);
  EXPECT_DOUBLE_EQ(wrap_2pi(2 * pi), 0.0);
  EXPECT_DOUBLE_EQ(wrap_pi(1.5 * pi), -0.5 * pi);
  EXPECT_DOUBLE_EQ(wrap_pi(pi), pi);
  EXPECT_DOUBLE_EQ(circular_mean(std::vector<double>{pi - 0.1, -pi + 0.1}), pi);
}

TEST(Stats, ChiSquareSeparatesUniformFromClustered) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  std::vector<double> uniform;
  std::vector<double> clustered;
  for (int i = 0; i < 2000; ++i) {
    uniform.push_back(u(rng));
    clustered.push_back(0.3 * u(rng));
  }
  EXPECT_GT(chi_square_uniform_phase(uniform).p_value, 0.01);
  EXPECT_LT(chi_square_uniform_phase(clustered).p_value, 1e-6);
}

TEST(Stats, KsAgainstArcsine) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> arcsine;
  std::vector<double> flat;
  for (int i = 0; i < 10000; ++i) {
    arcsine.push_back(0.5 * (1.0 + std::cos(2 * std::numbers::pi * u(rng))));
    flat.push_back(u(rng));
  }
  EXPECT_GT(ks_test(arcsine, arcsine_cdf).p_value, 0.01);
  EXPECT_LT(ks_test(flat, arcsine_cdf).p_value, 1e-6);
  EXPECT_NEAR(arcsine_cdf(0.5), 0.5, 1e-12);
}

TEST(Stats, HistogramClampsEdges) {
  const std::vector<double> x{-1.0, 0.1, 0.6, 2.0};
  const Histogram h = histogram(x, 0.0, 1.0, 2);
  EXPECT_EQ(h.counts[0], 2u);
  EXPECT_EQ(h.counts[1], 2u);
  EXPECT_DOUBLE_EQ(h.bin_center(1), 0.75);
}

}  // namespace
}  // namespace dpm::stats
