// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qfc/comb.hpp"
#include "qfc/hom.hpp"
#include "qfc/rng.hpp"

namespace qfc {
namespace {

constexpr double kFsr = 99.03e9;
const Envelope kEnv = Envelope::from_fwhm_hz(190.41e6);

FringeModel single(double detuning, double v, double phi, double tau0 = 0.0) {
  FringeModel m;
  m.pairs = {{detuning, v, phi}};
  m.tau0 = tau0;
  m.envelope = kEnv;
  return m;
}

std::vector<int> range(int a, int b) {
  std::vector<int> v;
  for (int m = a; m <= b; ++m) v.push_back(m);
  return v;
}

TEST(Envelope, NormalizedAtZero) { EXPECT_DOUBLE_EQ(envelope_value(kEnv, 0.0), 1.0); }

TEST(Envelope, HalfValuePoint) {
  const double x = oracle::bisect([](double x) { return (1.0 + x) * std::exp(-x) - 0.5; }, 0.0, 10.0);
  EXPECT_NEAR(x, 1.678346, 1e-6);
  EXPECT_NEAR(envelope_value(kEnv, x / kEnv.sigma), 0.5, 1e-12);
  EXPECT_NEAR(envelope_value(kEnv, -x / kEnv.sigma), 0.5, 1e-12);
}

TEST(Envelope, FivePercentBeyondFourPointTwoNanoseconds) {
  const Envelope env = Envelope::from_fwhm_hz(190e6);
  for (double tau = 4.2e-9; tau < 20e-9; tau += 0.1e-9) {
    EXPECT_LE(envelope_value(env, tau), 0.05);
    EXPECT_LE(envelope_value(env, -tau), 0.05);
  }
}

TEST(Envelope, MatchesQuadratureOfSquaredLorentzian) {
  double worst = 0.0;
  for (double tau = -10e-9; tau <= 10e-9 + 1e-15; tau += 0.5e-9)
    worst = std::max(worst, std::abs(envelope_value(kEnv, tau) -
                                     oracle::envelope_by_quadrature(kEnv.sigma, tau)));
  EXPECT_LT(worst, 1e-6);
}

TEST(Envelope, StrictlyDecreasingInDelay) {
  double prev = envelope_value(kEnv, 0.0);
  for (double tau = 0.01e-9; tau < 30e-9; tau += 0.01e-9) {
    const double e = envelope_value(kEnv, tau);
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(HomSingle, PerfectDipAtTau0) {
  EXPECT_NEAR(hom_single(single(396.12e9, 1.0, 0.0, 3e-12), 3e-12), 0.0, 1e-15);
}

TEST(HomSingle, AntisymmetricPeakAtTau0) {
  EXPECT_NEAR(hom_single(single(396.12e9, 1.0, kPi), 0.0), 1.0, 1e-15);
}

TEST(HomSingle, BaselineFarFromTau0) {
  EXPECT_NEAR(hom_single(single(396.12e9, 0.8, 0.3), 20e-9), 0.5, 1e-9);
}

TEST(HomSingle, AdjacentMinimaSpacedByInverseDetuning) {
  const FringeModel m = single(990.3e9, 0.9, 0.0);
  auto f = [&](double t) { return hom_single(m, t); };
  // Local minima on a dense grid, refined by golden-section search.
  std::vector<double> minima;
  const double h = 1e-15;
  for (double t = -0.2e-12; t < 2.0e-12; t += h) {
    if (f(t) < f(t - h) && f(t) <= f(t + h)) {
      double a = t - h, b = t + h;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int i = 0; i < 100; ++i) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        (f(c) < f(d) ? b : a) = (f(c) < f(d) ? d : c);
      }
      minima.push_back(0.5 * (a + b));
    }
  }
  ASSERT_GE(minima.size(), 2u);
  EXPECT_NEAR((minima[1] - minima[0]) * 1e12, 1.0098, 1e-4);
}

TEST(HomSingle, RequiresExactlyOnePair) {
  FringeModel m = comb_fringe_model({2, 3}, kFsr, 1.0, 0.0, kEnv);
  EXPECT_THROW(hom_single(m, 0.0), DomainError);
}

TEST(HomSingle, StaysInUnitIntervalAndIsMirrorSymmetric) {
  CounterRng rng(8, RngStream::test, 0);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.uniform();
    const double phi = kTwoPi * rng.uniform();
    const double t = (rng.uniform() - 0.5) * 20e-9;
    const double tau0 = (rng.uniform() - 0.5) * 1e-9;
    const double p = hom_single(single(1.98e12, v, phi, tau0), tau0 + t);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_NEAR(p, hom_single(single(1.98e12, v, -phi, tau0), tau0 - t), 1e-10);
  }
}

TEST(HomSingle, ProductModeDecaysToZero) {
  FringeModel m = single(396.12e9, 0.8, 0.0);
  m.mode = HomMode::product;
  EXPECT_NEAR(hom_single(m, 0.0), 0.5 * (1.0 - 0.8), 1e-15);
  EXPECT_LT(hom_single(m, 50e-9), 1e-12);
}

TEST(HomMulti, RevivalMinimaAtMultiplesOfHalfInverseFsr) {
  const FringeModel m = comb_fringe_model(range(2, 5), kFsr, 1.0, 0.0, kEnv);
  const double period = revival_period(kFsr);
  EXPECT_NEAR(period * 1e12, 5.049, 1e-3);
  for (int j = -3; j <= 3; ++j) {
    const double t = j * period;
    // Every revival bottoms out at the envelope-limited depth.
    EXPECT_NEAR(hom_multi(m, t), 0.5 * (1.0 - envelope_value(kEnv, t)), 1e-12) << j;
    EXPECT_LT(hom_multi(m, t), 1e-3) << j;
    EXPECT_GT(hom_multi(m, t + 0.1e-12), hom_multi(m, t));
    EXPECT_GT(hom_multi(m, t - 0.1e-12), hom_multi(m, t));
  }
}

TEST(HomMulti, SinglePairReducesToHomSingle) {
  const FringeModel m = single(1.98e12, 0.77, 0.4, 1e-12);
  double worst = 0.0;
  for (double t = -10e-12; t <= 10e-12; t += 0.01e-12)
    worst = std::max(worst, std::abs(hom_multi(m, t) - hom_single(m, t)));
  EXPECT_EQ(worst, 0.0);
}

TEST(HomMulti, DipSharpensWithMorePairs) {
  const double w5 = central_dip_fwhm(comb_fringe_model(range(2, 5), kFsr, 1.0, 0.0, kEnv), 1e-15, 2e-12);
  const double w10 = central_dip_fwhm(comb_fringe_model(range(2, 10), kFsr, 1.0, 0.0, kEnv), 1e-15, 2e-12);
  const double w15 = central_dip_fwhm(comb_fringe_model(range(2, 15), kFsr, 1.0, 0.0, kEnv), 1e-15, 2e-12);
  EXPECT_GT(w5, w10);
  EXPECT_GT(w10, w15);
  // Half-depth crossing of the 2-5 dip by an independent bisection.
  auto f = [&](double t) {
    double s = 0.0;
    for (int m = 2; m <= 5; ++m) s += 0.5 * (1.0 - std::cos(kTwoPi * 2 * m * kFsr * t) * envelope_value(kEnv, t));
    return s / 4.0 - 0.25;
  };
  double hi = 1e-16;
  while (f(hi) < 0.0) hi += 1e-16;
  const double half = oracle::bisect(f, hi - 1e-16, hi);
  EXPECT_NEAR(w5, 2.0 * half, 1e-20);
}

TEST(HomMulti, InvariantUnderPairPermutation) {
  FringeModel a = comb_fringe_model({2, 3, 4, 5, 6}, kFsr, 0.8, 0.3, kEnv, 0.5e-12, 0.1);
  FringeModel b = a;
  std::reverse(b.pairs.begin(), b.pairs.end());
  std::swap(b.pairs[0], b.pairs[2]);
  for (double t = -8e-12; t <= 8e-12; t += 0.013e-12)
    EXPECT_NEAR(hom_multi(a, t), hom_multi(b, t), 1e-15);
}

TEST(HomMulti, PhaseShiftByPiMapsDipsToPeaks) {
  FringeModel dip = comb_fringe_model(range(2, 5), kFsr, 0.85, 0.2, kEnv);
  FringeModel peak = dip;
  for (auto& c : peak.pairs) c.phase += kPi;
  const double h = 0.01e-12;
  int checked = 0;
  for (double t = -6e-12; t <= 6e-12; t += h) {
    const double v = hom_multi(dip, t);
    if (v < hom_multi(dip, t - h) && v <= hom_multi(dip, t + h)) {
      EXPECT_NEAR(hom_multi(peak, t), 1.0 - v, 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 5);
}

TEST(HomMulti, AccidentalFloorRaisesMinimum) {
  FringeModel m = comb_fringe_model(range(2, 5), kFsr, 1.0, 0.0, kEnv);
  m.alpha = 0.2;
  EXPECT_NEAR(hom_multi(m, 0.0), 0.1, 1e-12);
  EXPECT_THROW(hom_multi(FringeModel{}, 0.0), DomainError);
}

TEST(Periods, Examples) {
  EXPECT_NEAR(oscillation_period(0.9903e12) * 1e12, 1.0098, 1e-4);
  EXPECT_NEAR(oscillation_period(2.9709e12) * 1e12, 0.3366, 1e-4);
  EXPECT_NEAR(revival_period(99.03e9) * 1e12, 5.049, 1e-3);
  EXPECT_THROW(oscillation_period(0.0), DomainError);
  EXPECT_THROW(revival_period(-1.0), DomainError);
}

}  // namespace
}  // namespace qfc
