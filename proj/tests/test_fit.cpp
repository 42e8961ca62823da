// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qfc/counting.hpp"
#include "qfc/fit.hpp"

namespace qfc {
namespace {

constexpr double kFsr = 99.03e9;
const Envelope kEnv = Envelope::from_fwhm_hz(190.41e6);

DetectorModel ideal_detector() {
  DetectorModel det;
  det.efficiency_signal = 1.0;
  det.efficiency_idler = 1.0;
  det.dark_rate = 0.0;
  det.coincidence_window = 1e-30;
  return det;
}

ScanConfig scan_ps(double start, double stop, double step, double dwell = 1.0) {
  ScanConfig s;
  s.tau_start = start * 1e-12;
  s.tau_stop = stop * 1e-12;
  s.tau_step = step * 1e-12;
  s.dwell = dwell;
  return s;
}

// Noise-free dataset with counts rounded from the expectation.
FringeDataset exact_dataset(const FringeModel& m, const ScanConfig& scan, double total) {
  FringeDataset d;
  d.dwell = scan.dwell;
  for (std::size_t j = 0; j < scan.point_count(); ++j) {
    const double tau = scan.tau_at(j);
    d.points.push_back({tau, std::llround(total * hom_multi(m, tau))});
  }
  return d;
}

FringeFitOptions single_pair_options(int m) {
  FringeFitOptions opt;
  opt.detunings_hz = {2.0 * m * kFsr};
  opt.envelope = kEnv;
  opt.fixed_tau0 = 0.0;
  return opt;
}

TEST(FitFringe, RecoversNoiselessSinglePair) {
  const FringeModel truth = comb_fringe_model({2}, kFsr, 0.8, 1.0, kEnv);
  const auto data = exact_dataset(truth, scan_ps(-3, 3, 0.05), 1e12);
  const FitResult r = fit_fringe(data, single_pair_options(2));
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.value("V"), 0.8, 1e-6);
  EXPECT_NEAR(r.value("phi"), 1.0, 1e-6);
  EXPECT_NEAR(r.value("N"), 1e12, 1e12 * 1e-6);
  EXPECT_FALSE(r.has("tau0_s"));
}

TEST(FitFringe, RecoversNoiselessMultiplexedWithFreeDelayOffset) {
  const FringeModel truth = comb_fringe_model({2, 3, 4, 5}, kFsr, 0.7, -2.0, kEnv, 0.3e-12);
  const auto data = exact_dataset(truth, scan_ps(-6, 6, 0.02), 1e12);
  FringeFitOptions opt;
  for (int m : {2, 3, 4, 5}) opt.detunings_hz.push_back(2.0 * m * kFsr);
  opt.envelope = kEnv;
  const FitResult r = fit_fringe(data, opt);
  EXPECT_NEAR(r.value("V"), 0.7, 1e-6);
  // phi and tau0 trade along the shared beat, so compare the fringe itself.
  FringeModel fitted = comb_fringe_model({2, 3, 4, 5}, kFsr, r.value("V"), r.value("phi"), kEnv,
                                         r.value("tau0_s"));
  for (const auto& p : data.points)
    EXPECT_NEAR(hom_multi(fitted, p.tau), hom_multi(truth, p.tau), 1e-6);
}

TEST(FitFringe, FitsPoissonDataWithinThreeSigma) {
  const double v_true = 0.7862;
  const FringeModel truth = comb_fringe_model({2}, kFsr, v_true, 0.0, kEnv);
  // About 500 counts per point with no accidentals.
  const auto data =
      simulate_fringe(truth, scan_ps(-2, 2, 0.1), ideal_detector(), 1000.0, 11);
  const FitResult r = fit_fringe(data, single_pair_options(2));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value("V"), v_true, 3.0 * r.sigma("V"));
  EXPECT_GT(r.sigma("V"), 0.005);
  EXPECT_LT(r.sigma("V"), 0.06);
  EXPECT_NEAR(r.value("phi"), 0.0, 3.0 * r.sigma("phi"));
}

TEST(FitFringe, NullVisibilityIsNotASpuriousFringe) {
  // |V| from a free-phase fit is Rayleigh-like under the null: about 86%
  // of datasets lie within 2 sigma.
  const FringeModel truth = comb_fringe_model({2}, kFsr, 0.0, 0.0, kEnv);
  int consistent = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const auto data = simulate_fringe(truth, scan_ps(-2, 2, 0.1), ideal_detector(), 1000.0,
                                      static_cast<std::uint64_t>(s));
    const FitResult r = fit_fringe(data, single_pair_options(2));
    consistent += r.value("V") <= 2.0 * r.sigma("V");
  }
  EXPECT_GE(consistent, 38);
}

TEST(FitFringe, FlatDataIsDegenerateNotAnError) {
  FringeDataset d;
  d.dwell = 1.0;
  for (int j = 0; j < 20; ++j) d.points.push_back({j * 0.1e-12, 500});
  const FitResult r = fit_fringe(d, single_pair_options(2));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.value("V"), 0.0);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(FitFringe, InputOrderDoesNotMatter) {
  const FringeModel truth = comb_fringe_model({3}, kFsr, 0.8, 0.4, kEnv);
  const auto data = simulate_fringe(truth, scan_ps(-2, 2, 0.05), ideal_detector(), 1000.0, 3);
  FringeDataset shuffled = data;
  std::mt19937 gen(1234);
  std::shuffle(shuffled.points.begin(), shuffled.points.end(), gen);
  const FitResult a = fit_fringe(data, single_pair_options(3));
  const FitResult b = fit_fringe(shuffled, single_pair_options(3));
  ASSERT_EQ(a.parameters.size(), b.parameters.size());
  for (std::size_t i = 0; i < a.parameters.size(); ++i) {
    EXPECT_EQ(a.parameters[i].value, b.parameters[i].value);
    EXPECT_EQ(a.parameters[i].sigma, b.parameters[i].sigma);
  }
}

TEST(FitFringe, RejectsTooFewPointsAndZeroDwell) {
  FringeDataset d;
  d.dwell = 1.0;
  for (int j = 0; j < 7; ++j) d.points.push_back({j * 1e-13, 100 + j});
  EXPECT_THROW(fit_fringe(d, single_pair_options(2)), DomainError);
  d.points.push_back({8e-13, 90});
  d.dwell = 0.0;
  EXPECT_THROW(fit_fringe(d, single_pair_options(2)), DomainError);
}

TEST(FitFringe, FreeDetuningRecoversBeatPeriod) {
  const FringeModel truth = comb_fringe_model({5}, kFsr, 0.85, 0.3, kEnv);
  const auto data = simulate_fringe(truth, scan_ps(-3, 3, 0.02, 60.0), ideal_detector(), 200.0, 8);
  FringeFitOptions opt = single_pair_options(5);
  opt.detunings_hz = {0.9 * 2.0 * 5 * kFsr};  // deliberately off; the start comes from the data
  opt.fit_detuning = true;
  const FitResult r = fit_fringe(data, opt);
  const double period = 1.0 / r.value("detuning_hz");
  EXPECT_NEAR(period, 1.0 / (10.0 * kFsr), 0.005 * 1.0 / (10.0 * kFsr));
}

FringeDataset envelope_data(double peak, std::uint64_t seed, bool noisy) {
  // Product-mode scan with V = 0: mean = rate * E(tau) / 2.
  FringeModel m = comb_fringe_model({2}, kFsr, 0.0, 0.0, kEnv);
  m.mode = HomMode::product;
  ScanConfig scan;
  scan.tau_start = 0.0;
  scan.tau_stop = 2.4e-9;
  scan.tau_step = 2e-12;
  if (!noisy) {
    FringeDataset d;
    d.dwell = 1.0;
    for (std::size_t j = 0; j < scan.point_count(); ++j)
      d.points.push_back({scan.tau_at(j), std::llround(peak * envelope_value(kEnv, scan.tau_at(j)))});
    return d;
  }
  return simulate_fringe(m, scan, ideal_detector(), 2.0 * peak, seed);
}

TEST(FitEnvelope, ExactDataRecoversWidth) {
  const auto r = fit_envelope(envelope_data(1e9, 0, false));
  EXPECT_NEAR(r.fwhm_hz, 190.41e6, 0.01 * 190.41e6);
  EXPECT_FALSE(r.ill_conditioned);
}

TEST(FitEnvelope, PoissonDataMedianWithinFifteenPercent) {
  std::vector<double> widths;
  for (std::uint64_t s = 0; s < 100; ++s) widths.push_back(fit_envelope(envelope_data(200.0, s, true)).fwhm_hz);
  std::nth_element(widths.begin(), widths.begin() + 50, widths.end());
  EXPECT_NEAR(widths[50], 190.41e6, 0.15 * 190.41e6);
}

TEST(FitEnvelope, FlatDataIsIllConditioned) {
  FringeDataset d;
  d.dwell = 1.0;
  for (int j = 0; j < 200; ++j) d.points.push_back({j * 1e-11, 300});
  const auto r = fit_envelope(d);
  EXPECT_TRUE(r.ill_conditioned);
}

TEST(Balance, ReportedCounts) {
  const Estimate p = estimate_balance({5914, 77}, {2527, 50});
  EXPECT_NEAR(p.value, 0.7006, 2e-4);
  EXPECT_NEAR(p.sigma, 0.0050, 3e-4);
  const Estimate one = estimate_balance({400, 20}, {0, 0});
  EXPECT_EQ(one.value, 1.0);
  EXPECT_EQ(one.sigma, 0.0);
  const Estimate e = estimate_balance({5000, 70}, {5000, 70});
  EXPECT_EQ(e.value, 0.5);
  EXPECT_NEAR(e.sigma, 0.0049497, 1e-7);
  EXPECT_THROW(estimate_balance({0, 1}, {0, 1}), DomainError);
}

TEST(Balance, SwappingChannelsReflectsBalance) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> n(1.0, 1e4), s(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const Estimate a{n(gen), s(gen)}, b{n(gen), s(gen)};
    const Estimate p = estimate_balance(a, b), q = estimate_balance(b, a);
    EXPECT_NEAR(p.value + q.value, 1.0, 1e-12);
    EXPECT_NEAR(p.sigma, q.sigma, 1e-12);
  }
}

TEST(PoolPhases, InverseVarianceMean) {
  const Estimate a = pool_phases({{0.1, 0.1}, {0.3, 0.1}});
  EXPECT_NEAR(a.value, 0.2, 1e-12);
  EXPECT_NEAR(a.sigma, 0.1 / std::sqrt(2.0), 1e-12);
  const Estimate b = pool_phases({{0.0, 0.1}, {1.0, 0.2}});
  EXPECT_NEAR(b.value, 0.2, 1e-12);
  const Estimate c = pool_phases({{3.1, 0.1}, {-3.1, 0.1}});
  EXPECT_NEAR(std::abs(c.value), kPi, 1e-12);
  EXPECT_THROW(pool_phases({}), DomainError);
}

TEST(Reconstruct, ReportedFidelity) {
  const auto r = reconstruct({0.701, 0.005}, {0.7713, 0.0193}, {-0.1168, 0.1094}, 20000, 1);
  EXPECT_NEAR(r.fidelity, 0.8830, 5e-4);
  EXPECT_NEAR(r.fidelity_sigma, 0.011, 2e-3);
  EXPECT_NEAR(r.rho.matrix()(1, 1).real(), 0.701, 1e-12);
  EXPECT_NEAR(std::abs(r.rho.matrix()(1, 2)), 0.7713 / 2, 1e-12);
  EXPECT_LT(r.rejection_rate(), 0.01);
}

TEST(Reconstruct, ZeroUncertaintyGivesZeroSpread) {
  const auto r = reconstruct({0.6, 0.0}, {0.7, 0.0}, {0.2, 0.0}, 1000, 1);
  EXPECT_EQ(r.fidelity_sigma, 0.0);
  EXPECT_EQ(r.mean_fidelity, r.fidelity);
}

TEST(Reconstruct, BoundaryStateStaysBelowUnitFidelity) {
  const auto r = reconstruct({0.5, 1e-7}, {1.0, 1e-7}, {0.0, 1e-7}, 5000, 1);
  EXPECT_LT(r.rejection_rate(), kMaxRejectionRate);
  EXPECT_LE(r.fidelity, 1.0);
  EXPECT_LE(r.mean_fidelity, 1.0);
  EXPECT_LE(r.fidelity_sigma, 1e-3);
}

TEST(Reconstruct, NonPhysicalInputsAreRejected) {
  EXPECT_THROW(reconstruct({0.9, 0.01}, {0.9, 0.01}, {0.0, 0.01}, 100, 1), NonPhysicalStateError);
  // Most draws land outside the physical region.
  EXPECT_THROW(reconstruct({0.5, 0.3}, {1.0, 0.01}, {0.0, 0.01}, 2000, 1), NonPhysicalStateError);
}

TEST(Reconstruct, MonteCarloMatchesFirstOrderPropagation) {
  const Estimate p{0.6, 0.01}, v{0.8, 0.02}, phi{0.5, 0.02};
  const auto r = reconstruct(p, v, phi, 50000, 4);
  // F = 1/2 + V cos(phi) / 2
  const double dv = 0.5 * std::cos(phi.value), dphi = -0.5 * v.value * std::sin(phi.value);
  const double linear = std::hypot(dv * v.sigma, dphi * phi.sigma);
  EXPECT_NEAR(r.fidelity_sigma, linear, 0.15 * linear);
}

}  // namespace
}  // namespace qfc
