#include "dpm/optics.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dpm/errors.h"
#include "dpm/stats.h"
#include "gtest/gtest.h"

namespace dpm::optics {
namespace {

constexpr double kPi = std::numbers::pi;

source::PulseTrain train_of(std::vector<double> phases, double mu, bool randomize = false,
                            std::uint64_t seed = 1) {
  source::SourceConfig cfg;
  cfg.mean_photon_number = mu;
  cfg.block_length = randomize ? 1 : static_cast<int>(phases.size());
  return source::emit_train(cfg, phases, randomize, seed);
}

InterferometerParams ideal_mzi() {
  InterferometerParams mzi;
  mzi.insertion_loss_db = 0.0;
  return mzi;
}

TEST(Attenuate, Examples) {
  const auto train = train_of({0.0, 1.0, 2.0}, 0.5);
  const auto same = attenuate(train, ChannelParams{});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(same.pulses[i].mean_photons, 0.5);
    EXPECT_EQ(same.pulses[i].phase, train.pulses[i].phase);
  }
  const auto weak = attenuate(train, ChannelParams{20.0});
  EXPECT_NEAR(weak.pulses[0].mean_photons, 0.005, 1e-15);

  const auto spool = attenuate(train, ChannelParams::fiber(100.0));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(spool.pulses[i].mean_photons, weak.pulses[i].mean_photons);
    EXPECT_EQ(spool.pulses[i].block_id, weak.pulses[i].block_id);
  }
  EXPECT_THROW(attenuate(train, ChannelParams{-1.0}), PreconditionError);
}

TEST(Attenuate, ComposesInDecibels) {
  const auto train = train_of({0.0}, 0.5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> db(0.0, 30.0);
  for (int i = 0; i < 100; ++i) {
    const double a = db(rng), b = db(rng);
    const double twice = attenuate(attenuate(train, {a}), {b}).pulses[0].mean_photons;
    const double once = attenuate(train, {a + b}).pulses[0].mean_photons;
    EXPECT_NEAR(twice / once, 1.0, 1e-12);
  }
}

TEST(Fringe, Examples) {
  auto mzi = ideal_mzi();
  const PortIntensity bright = fringe(1.0, 1.0, 0.0, mzi);
  EXPECT_DOUBLE_EQ(bright.port0, 1.0);
  EXPECT_DOUBLE_EQ(bright.port1, 0.0);

  mzi.visibility = 0.9902;
  const PortIntensity dark = fringe(1.0, 1.0, kPi, mzi);
  EXPECT_NEAR(dark.port0, 0.0049, 1e-12);
  EXPECT_NEAR(dark.port1, 0.9951, 1e-12);
}

TEST(Fringe, ConservesEnergy) {
  InterferometerParams mzi;
  mzi.visibility = 0.97;
  const double loss = std::pow(10.0, -0.3);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), phi = 10 * u(rng);
    const PortIntensity out = fringe(a, b, phi, mzi);
    EXPECT_NEAR(out.port0 + out.port1, loss * 0.5 * (a + b), 1e-15);
    EXPECT_GE(out.port0, 0.0);
    EXPECT_GE(out.port1, 0.0);
  }
}

TEST(Interfere, UsesPhaseOfDelayedNeighbour) {
  const auto train = train_of({0.0, 0.0, kPi, 0.5 * kPi}, 1.0);
  const auto out = interfere(train, ideal_mzi());
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].slot, 1);
  EXPECT_NEAR(out[0].port0, 1.0, 1e-12);
  EXPECT_NEAR(out[1].port1, 1.0, 1e-12);
  EXPECT_NEAR(out[2].port0, 0.5, 1e-12);

  InterferometerParams two_slot = ideal_mzi();
  two_slot.delay = 1e-9;
  EXPECT_EQ(interfere(train, two_slot).size(), 2u);
  InterferometerParams misaligned = ideal_mzi();
  misaligned.delay = 700e-12;
  EXPECT_THROW(interfere(train, misaligned), PreconditionError);
  EXPECT_EQ(delay_slots(ideal_mzi(), 500e-12), 1);
}

TEST(Interfere, RandomPhasesFollowArcsineLaw) {
  const auto train = train_of(std::vector<double>(20001, 0.0), 1.0, true, 17);
  const auto out = interfere(train, ideal_mzi());
  std::vector<double> fraction;
  for (const auto& p : out) fraction.push_back(p.port0 / (p.port0 + p.port1));
  ASSERT_GE(fraction.size(), 10000u);
  EXPECT_GT(stats::ks_test(fraction, stats::arcsine_cdf).p_value, 0.01);
}

TEST(ClickProbability, Examples) {
  DetectorParams quiet;
  quiet.dark_rate = 0.0;
  EXPECT_EQ(click_probability(0.0, quiet), 0.0);
  const DetectorParams det;
  EXPECT_NEAR(click_probability(0.0, det), 3.75e-8, 1e-20);
  for (double mu : {1e-5, 1e-4, 1e-3, 1e-2}) {
    const double approx = mu * det.efficiency + det.dark_probability();
    EXPECT_NEAR(click_probability(mu, det) / approx, 1.0, 0.01);
  }
  EXPECT_THROW(click_probability(-0.1, det), PreconditionError);
  for (double mu : {0.0, 0.1, 1.0, 10.0, 1e6}) {
    const double p = click_probability(mu, det);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Detect, NoLightNoDarkNoClicks) {
  DetectorParams quiet;
  quiet.dark_rate = 0.0;
  const std::vector<PortIntensity> zeros(1000);
  const ClickRecord r = detect(zeros, quiet, 3);
  EXPECT_EQ(r.total_port0 + r.total_port1, 0u);
  EXPECT_TRUE(r.totals_consistent());
}

TEST(Detect, ClickFractionWithinBinomialBounds) {
  DetectorParams det;
  det.dark_rate = 0.0;
  det.efficiency = 1.0;
  const std::size_t n = 1'000'000;
  const double p = -std::expm1(-0.001);
  std::vector<PortIntensity> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = {static_cast<std::int64_t>(i), 0.001, 0.001};
  const ClickRecord r = detect(in, det, 11);
  ASSERT_TRUE(r.totals_consistent());
  const double sigma = std::sqrt(n * p * (1 - p));
  EXPECT_NEAR(static_cast<double>(r.total_port0), n * p, 5 * sigma);
  EXPECT_NEAR(static_cast<double>(r.total_port1), n * p, 5 * sigma);

  const ClickRecord again = detect(in, det, 11);
  EXPECT_EQ(again.port0, r.port0);
  EXPECT_EQ(again.port1, r.port1);
}

TEST(ClickRecord, CsvAndConsistency) {
  ClickRecord r;
  r.slots = {3, 4};
  r.port0 = {1, 0};
  r.port1 = {1, 0};
  r.total_port0 = 1;
  r.total_port1 = 1;
  r.total_double = 1;
  EXPECT_TRUE(r.totals_consistent());
  std::ostringstream out;
  write_clicks_csv(out, r);
  EXPECT_EQ(out.str(), "slot,port0,port1\n3,1,1\n4,0,0\n");
  r.total_double = 0;
  EXPECT_FALSE(r.totals_consistent());
}

}  // namespace
}  // namespace dpm::optics
