// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfc/counting.hpp"
#include "qfc/error.hpp"
#include "qfc/hom.hpp"
#include "qfc/lm.hpp"
#include "qfc/rng.hpp"
#include "qfc/states.hpp"
#include "qfc/units.hpp"

namespace qfc {

struct FitParameter {
  std::string name;
  double value;
  double sigma;
};

/// Outcome of one least-squares estimate. Values are raw optimizer output;
/// clamping (e.g. of V to [0, 1]) happens only in the report accessors.
struct FitResult {
  std::vector<FitParameter> parameters;
  Eigen::MatrixXd covariance;  // same order and units as `parameters`
  double rss = 0.0;            // weighted residual sum of squares
  std::size_t points = 0;
  bool converged = false;
  int iterations = 0;
  int starts = 0;
  bool ill_conditioned = false;
  bool degenerate = false;
  std::vector<std::string> warnings;

  bool has(const std::string& name) const { return index_of(name) >= 0; }
  double value(const std::string& name) const { return at(name).value; }
  double sigma(const std::string& name) const { return at(name).sigma; }

  double reported_visibility() const { return std::clamp(value("V"), 0.0, 1.0); }

 private:
  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < parameters.size(); ++i)
      if (parameters[i].name == name) return static_cast<int>(i);
    return -1;
  }
  const FitParameter& at(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw DomainError("FitResult: no parameter named " + name);
    return parameters[static_cast<std::size_t>(i)];
  }
};

namespace detail {

/// Inverse of the curvature matrix; falls back to the pseudo-inverse and
/// reports ill-conditioning when it is (numerically) singular. The test runs
/// on the diagonally normalized matrix so parameter units do not matter.
inline Eigen::MatrixXd invert_curvature(const Eigen::MatrixXd& jtj, bool& ill_conditioned) {
  const Eigen::Index n = jtj.rows();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    scale(i) = jtj(i, i) > 0.0 ? 1.0 / std::sqrt(jtj(i, i)) : 0.0;
    if (!(jtj(i, i) > 0.0)) ill_conditioned = true;
  }
  const Eigen::MatrixXd normalized = scale.asDiagonal() * jtj * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > 1e-12 * largest && ev(i) > 0.0) {
      inv(i) = 1.0 / ev(i);
    } else {
      ill_conditioned = true;
    }
  }
  const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return scale.asDiagonal() * pinv * scale.asDiagonal();
}

inline std::vector<FringePoint> sorted_points(const FringeDataset& data) {
  std::vector<FringePoint> pts = data.points;
  std::sort(pts.begin(), pts.end(),
            [](const FringePoint& a, const FringePoint& b) { return a.tau < b.tau; });
  return pts;
}

/// Frequency (Hz) of the strongest periodogram peak of the mean-subtracted
/// counts, searched between two cycles per window and the Nyquist limit.
inline double dominant_beat_frequency(const std::vector<FringePoint>& pts) {
  const double span = pts.back().tau - pts.front().tau;
  double mean = 0.0;
  for (const auto& p : pts) mean += static_cast<double>(p.counts);
  mean /= static_cast<double>(pts.size());
  std::vector<double> steps;
  for (std::size_t i = 1; i < pts.size(); ++i) steps.push_back(pts[i].tau - pts[i - 1].tau);
  std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
  const double nyquist = 0.5 / steps[steps.size() / 2];
  const double lo = 2.0 / span;
  const double df = 0.1 / span;
  double best_f = lo, best_power = -1.0;
  for (double f = lo; f <= nyquist; f += df) {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& p : pts)
      acc += (static_cast<double>(p.counts) - mean) * std::polar(1.0, -kTwoPi * f * p.tau);
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return best_f;
}

/// Period (ps) shared by all beats when every detuning is an integer
/// multiple of a common base frequency, searched among min/k for k <= 64.
inline std::optional<double> common_beat_period_ps(const std::vector<double>& detunings_hz) {
  const double smallest = *std::min_element(detunings_hz.begin(), detunings_hz.end());
  if (!(smallest > 0.0)) return std::nullopt;
  for (int k = 1; k <= 64; ++k) {
    const double base = smallest / k;
    const bool all = std::all_of(detunings_hz.begin(), detunings_hz.end(), [&](double d) {
      const double ratio = d / base;
      return std::abs(ratio - std::round(ratio)) < 1e-6;
    });
    if (all) return 1e12 / base;
  }
  return std::nullopt;
}

}  // namespace detail

//---------------------------------------------------------------------------//
// Fringe fitting
//---------------------------------------------------------------------------//

struct FringeFitOptions {
  std::vector<double> detunings_hz;  // one per multiplexed pair
  Envelope envelope{kTwoPi * 190.41e6};
  HomMode mode = HomMode::normalized;
  /// Accidental fraction, held fixed: it enters the model only through
  /// (1 - alpha) V, so it cannot be separated from V by the fit.
  double alpha = 0.0;
  /// When set, tau0 is held at this value; otherwise it is fitted with this
  /// as the center of the start grid.
  std::optional<double> fixed_tau0;
  double tau0_start = 0.0;
  /// Free the (single) detuning as well; its start comes from a periodogram.
  bool fit_detuning = false;
  LmOptions lm;
};

inline constexpr std::size_t kMinFringePoints = 8;

/// Weighted least squares of counts against N * p(tau; V, phi, tau0[, detuning]).
///
/// Weights are 1/max(counts, 1). Multi-start over phi in {0, pi/2, pi, 3pi/2}
/// and, when tau0 is free, 8 offsets spanning one period of the slowest beat.
/// The best start has the lowest residual, ties going to the smallest |phi|.
/// Parameters: N, V, phi (rad, wrapped to (-pi, pi]), tau0_s, detuning_hz.
inline FitResult fit_fringe(const FringeDataset& data, const FringeFitOptions& opt) {
  if (data.points.size() < kMinFringePoints)
    throw DomainError("fit_fringe: at least 8 data points are required");
  if (!(data.dwell > 0.0)) throw DomainError("fit_fringe: dwell must be positive");
  if (opt.detunings_hz.empty()) throw DomainError("fit_fringe: no detunings given");
  if (opt.fit_detuning && opt.detunings_hz.size() != 1)
    throw DomainError("fit_fringe: the detuning can only be fitted for a single pair");

  const std::vector<FringePoint> pts = detail::sorted_points(data);
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::VectorXd tau_ps(n), counts(n), sqrt_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    tau_ps(i) = pts[static_cast<std::size_t>(i)].tau * 1e12;
    counts(i) = static_cast<double>(pts[static_cast<std::size_t>(i)].counts);
    sqrt_w(i) = 1.0 / std::sqrt(std::max(counts(i), 1.0));
  }

  // Internal parameter vector (scaled units): N, V, phi, [tau0 ps], [detuning THz].
  const bool free_tau0 = !opt.fixed_tau0.has_value();
  const Eigen::Index k_tau0 = free_tau0 ? 3 : -1;
  const Eigen::Index k_det = opt.fit_detuning ? (free_tau0 ? 4 : 3) : -1;
  const Eigen::Index dim = 3 + (free_tau0 ? 1 : 0) + (opt.fit_detuning ? 1 : 0);

  FringeModel model;
  model.envelope = opt.envelope;
  model.mode = opt.mode;
  model.alpha = opt.alpha;
  for (double d : opt.detunings_hz) model.pairs.push_back({d, 0.0, 0.0});

  auto configure = [&](const Eigen::VectorXd& x) {
    for (auto& c : model.pairs) {
      c.visibility = x(1);
      c.phase = x(2);
    }
    model.tau0 = free_tau0 ? x(k_tau0) * 1e-12 : *opt.fixed_tau0;
    if (k_det >= 0) model.pairs.front().detuning_hz = x(k_det) * 1e12;
  };
  // Unclamped so the optimizer sees a smooth surface for any V.
  auto probability = [&](double tau) {
    const double dt = tau - model.tau0;
    const double e = envelope_value(model.envelope, dt);
    double sum = 0.0;
    for (const auto& c : model.pairs) sum += detail::component_probability(c, dt, e, model.mode);
    return (1.0 - model.alpha) * sum / static_cast<double>(model.pairs.size()) + 0.5 * model.alpha;
  };
  auto residuals = [&](const Eigen::VectorXd& x) {
    configure(x);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i)
      r(i) = sqrt_w(i) * (counts(i) - x(0) * probability(tau_ps(i) * 1e-12));
    return r;
  };

  const double mean_counts = counts.mean();
  const double n_start = std::max(2.0 * mean_counts, 1.0);
  const double det_start_thz =
      opt.fit_detuning ? detail::dominant_beat_frequency(pts) * 1e-12 : 0.0;
  const double tau0_center_ps = free_tau0 ? opt.tau0_start * 1e12 : 0.0;
  const double slowest_period_ps =
      1e12 / *std::min_element(opt.detunings_hz.begin(), opt.detunings_hz.end());

  LmOptions lm = opt.lm;
  lm.typical = Eigen::VectorXd::Ones(dim);
  lm.typical(0) = n_start;
  if (k_tau0 >= 0) lm.typical(k_tau0) = slowest_period_ps;
  if (k_det >= 0) lm.typical(k_det) = det_start_thz;

  FitResult result;
  result.points = pts.size();

  const bool flat = counts.maxCoeff() == counts.minCoeff();
  LmResult best;
  bool have_best = false;
  int starts = 0;
  auto consider = [&](LmResult&& candidate) {
    ++starts;
    if (!candidate.converged || !std::isfinite(candidate.cost)) return;
    if (!have_best) {
      best = std::move(candidate);
      have_best = true;
      return;
    }
    const double tie = 1e-9 * std::max(best.cost, 1e-300);
    const bool lower = candidate.cost < best.cost - tie;
    const bool tied = std::abs(candidate.cost - best.cost) <= tie;
    auto phase_mag = [](const LmResult& r) {
      return std::abs(wrap_pi(r.x(2) + (r.x(1) < 0.0 ? kPi : 0.0)));
    };
    if (lower || (tied && phase_mag(candidate) < phase_mag(best))) best = std::move(candidate);
  };

  if (flat) {
    // No fringe to speak of: report V = 0 directly instead of chasing an
    // undefined phase.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    x(0) = n_start;
    if (k_tau0 >= 0) x(k_tau0) = tau0_center_ps;
    if (k_det >= 0) x(k_det) = det_start_thz;
    LmResult r;
    r.x = x;
    r.cost = residuals(x).squaredNorm();
    r.converged = true;
    r.jtj = [&] {
      auto fn = residuals;
      const Eigen::MatrixXd jac = numeric_jacobian(fn, x, lm.typical, n);
      return Eigen::MatrixXd(jac.transpose() * jac);
    }();
    best = r;
    have_best = true;
    starts = 1;
    result.degenerate = true;
    result.warnings.push_back("all counts equal: no fringe present, V reported as 0");
  } else {
    const int tau_starts = free_tau0 ? 8 : 1;
    for (int q = 0; q < 4; ++q) {
      for (int t = 0; t < tau_starts; ++t) {
        Eigen::VectorXd x(dim);
        x(0) = n_start;
        x(1) = 0.5;
        x(2) = q * kPi / 2.0;
        if (k_tau0 >= 0)
          x(k_tau0) = tau0_center_ps + slowest_period_ps * (t / 8.0 - 0.5);
        if (k_det >= 0) x(k_det) = det_start_thz;
        consider(levenberg_marquardt(residuals, x, lm));
      }
    }
  }
  // Beats at integer multiples of one base frequency repeat with its period,
  // up to the slowly varying envelope. Report the branch nearest tau0_start.
  if (have_best && !flat && k_tau0 >= 0) {
    if (const auto period_ps = detail::common_beat_period_ps(opt.detunings_hz)) {
      const double shift = std::round((best.x(k_tau0) - tau0_center_ps) / *period_ps);
      if (shift != 0.0) {
        Eigen::VectorXd x = best.x;
        x(k_tau0) -= shift * *period_ps;
        LmResult polished = levenberg_marquardt(residuals, x, lm);
        ++starts;
        if (polished.converged && std::isfinite(polished.cost)) best = std::move(polished);
      }
    }
  }
  result.starts = starts;
  if (!have_best) {
    throw FitError("fit_fringe: no start converged within " + std::to_string(lm.max_iterations) +
                       " iterations",
                   best.cost, starts);
  }

  Eigen::VectorXd x = best.x;
  Eigen::MatrixXd cov = detail::invert_curvature(best.jtj, result.ill_conditioned);
  // Canonical sign: V >= 0, absorbing the sign into phi.
  if (x(1) < 0.0) {
    x(1) = -x(1);
    x(2) += kPi;
    cov.row(1) *= -1.0;
    cov.col(1) *= -1.0;
  }
  x(2) = wrap_pi(x(2));

  // Back to SI units.
  std::vector<double> scale(static_cast<std::size_t>(dim), 1.0);
  if (k_tau0 >= 0) scale[static_cast<std::size_t>(k_tau0)] = 1e-12;
  if (k_det >= 0) scale[static_cast<std::size_t>(k_det)] = 1e12;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      cov(i, j) *= scale[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(j)];

  auto sd = [&](Eigen::Index i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  result.parameters.push_back({"N", x(0), sd(0)});
  result.parameters.push_back({"V", x(1), sd(1)});
  result.parameters.push_back({"phi", x(2), sd(2)});
  if (k_tau0 >= 0) result.parameters.push_back({"tau0_s", x(k_tau0) * 1e-12, sd(k_tau0)});
  if (k_det >= 0) result.parameters.push_back({"detuning_hz", x(k_det) * 1e12, sd(k_det)});
  result.covariance = cov;
  result.rss = best.cost;
  result.converged = true;
  result.iterations = best.iterations;
  if (result.ill_conditioned)
    result.warnings.push_back("curvature matrix singular: some parameters are not constrained");
  return result;
}

//---------------------------------------------------------------------------//
// Envelope fitting
//---------------------------------------------------------------------------//

struct EnvelopeFitOptions {
  double tau0 = 0.0;  // s, held fixed
  LmOptions lm;
};

struct EnvelopeFitResult {
  FitResult fit;  // parameters: baseline, amplitude, sigma_rad_s
  double sigma = 0.0;
  double sigma_error = 0.0;
  double fwhm_hz = 0.0;
  double fwhm_error_hz = 0.0;
  double tau0 = 0.0;
  bool ill_conditioned = false;
};

/// Fits counts = baseline + amplitude * E(tau - tau0; sigma) to a coarse
/// scan on which the beat itself is not resolved.
inline EnvelopeFitResult fit_envelope(const FringeDataset& data,
                                      const EnvelopeFitOptions& opt = {}) {
  if (data.points.size() < 4) throw DomainError("fit_envelope: at least 4 data points are required");
  const std::vector<FringePoint> pts = detail::sorted_points(data);
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::VectorXd dt_ns(n), counts(n), sqrt_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dt_ns(i) = (pts[static_cast<std::size_t>(i)].tau - opt.tau0) * 1e9;
    counts(i) = static_cast<double>(pts[static_cast<std::size_t>(i)].counts);
    sqrt_w(i) = 1.0 / std::sqrt(std::max(counts(i), 1.0));
  }
  const double span_s = pts.back().tau - pts.front().tau;

  // x = (baseline, amplitude, sigma in 1/ns)
  auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(n);
    const Envelope env{x(2)};
    for (Eigen::Index i = 0; i < n; ++i)
      r(i) = sqrt_w(i) * (counts(i) - x(0) - x(1) * envelope_value(env, dt_ns(i)));
    return r;
  };

  LmOptions lm = opt.lm;
  const double lo = counts.minCoeff();
  const double hi = counts.maxCoeff();
  lm.typical = Eigen::Vector3d(std::max(hi, 1.0), std::max(hi, 1.0), 1.0);

  LmResult best;
  bool have_best = false;
  int starts = 0;
  for (double sigma_start : {0.2, 0.6, 2.0, 6.0}) {
    ++starts;
    LmResult r = levenberg_marquardt(residuals, Eigen::Vector3d(lo, hi - lo, sigma_start), lm);
    if (!std::isfinite(r.cost)) continue;
    if (!have_best || r.cost < best.cost) {
      best = std::move(r);
      have_best = true;
    }
  }
  if (!have_best) throw FitError("fit_envelope: no start produced a finite residual", 0.0, starts);

  EnvelopeFitResult out;
  FitResult& fit = out.fit;
  fit.points = pts.size();
  fit.starts = starts;
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  fit.rss = best.cost;
  Eigen::MatrixXd cov = detail::invert_curvature(best.jtj, fit.ill_conditioned);
  // sigma: 1/ns -> rad/s
  cov.row(2) *= 1e9;
  cov.col(2) *= 1e9;
  fit.covariance = cov;
  auto sd = [&](Eigen::Index i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  fit.parameters = {{"baseline", best.x(0), sd(0)},
                    {"amplitude", best.x(1), sd(1)},
                    {"sigma_rad_s", best.x(2) * 1e9, sd(2)}};

  out.sigma = std::abs(best.x(2)) * 1e9;
  out.sigma_error = sd(2);
  out.fwhm_hz = out.sigma / kTwoPi;
  out.fwhm_error_hz = out.sigma_error / kTwoPi;
  out.tau0 = opt.tau0;

  bool ill = fit.ill_conditioned;
  if (!(out.sigma > 0.0) || span_s < 1.0 / out.sigma) {
    ill = true;
    fit.warnings.push_back("scan span shorter than 1/sigma: envelope width not constrained");
  }
  if (!(std::abs(best.x(1)) > 2.0 * sd(1))) {
    ill = true;
    fit.warnings.push_back("envelope amplitude not significant: data are flat");
  }
  fit.ill_conditioned = ill;
  out.ill_conditioned = ill;
  return out;
}

//---------------------------------------------------------------------------//
// Balance, phase pooling, reconstruction
//---------------------------------------------------------------------------//

struct Estimate {
  double value;
  double sigma;
};

/// p = n1/(n1+n2), sigma_p = sqrt(n2^2 s1^2 + n1^2 s2^2)/(n1+n2)^2.
inline Estimate estimate_balance(Estimate n1, Estimate n2) {
  const double total = n1.value + n2.value;
  if (!(total > 0.0)) throw DomainError("estimate_balance: total count must be positive");
  const double var = n2.value * n2.value * n1.sigma * n1.sigma +
                     n1.value * n1.value * n2.sigma * n2.sigma;
  return {n1.value / total, std::sqrt(var) / (total * total)};
}

/// Inverse-variance weighted mean of per-pair phase estimates, unwrapped
/// around the first estimate.
inline Estimate pool_phases(const std::vector<Estimate>& phases) {
  if (phases.empty()) throw DomainError("pool_phases: no estimates");
  const double ref = phases.front().value;
  double wsum = 0.0, acc = 0.0;
  for (const auto& e : phases) {
    if (!(e.sigma > 0.0)) throw DomainError("pool_phases: uncertainties must be positive");
    const double w = 1.0 / (e.sigma * e.sigma);
    wsum += w;
    acc += w * wrap_pi(e.value - ref);
  }
  return {wrap_pi(ref + acc / wsum), 1.0 / std::sqrt(wsum)};
}

struct ReconstructionResult {
  RestrictedDensityMatrix rho;
  double fidelity;        // from the central values
  double fidelity_sigma;  // Monte Carlo sample standard deviation
  double mean_fidelity;   // Monte Carlo sample mean
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double rejection_rate() const {
    const auto total = accepted + rejected;
    return total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
  }
};

inline constexpr double kMaxRejectionRate = 0.5;

/// Density matrix from central (p, V, phi) plus Monte Carlo propagation of
/// their Gaussian uncertainties into the fidelity. Draws are clamped to
/// p, V in [0, 1] and then rejected when non-physical.
inline ReconstructionResult reconstruct(Estimate p, Estimate visibility, Estimate phi,
                                        std::size_t samples, std::uint64_t seed,
                                        double theta_target = 0.0) {
  const RestrictedDensityMatrix rho = restricted_density(p.value, visibility.value, phi.value);
  ReconstructionResult out{rho, qfc::fidelity(rho, theta_target), 0.0, 0.0, 0, 0};
  if (samples == 0) {
    out.mean_fidelity = out.fidelity;
    return out;
  }
  // Welford accumulation keeps identical draws at exactly zero spread.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    CounterRng rng(seed, RngStream::reconstruct, i);
    const double ps = std::clamp(p.value + p.sigma * rng.normal(), 0.0, 1.0);
    const double vs = std::clamp(visibility.value + visibility.sigma * rng.normal(), 0.0, 1.0);
    const double fs = phi.value + phi.sigma * rng.normal();
    if (!is_physical(ps, vs)) {
      ++out.rejected;
      continue;
    }
    ++out.accepted;
    const double f = 0.5 + 0.5 * vs * std::cos(fs - theta_target);
    const double delta = f - mean;
    mean += delta / static_cast<double>(out.accepted);
    m2 += delta * (f - mean);
  }
  if (out.rejection_rate() > kMaxRejectionRate) {
    throw NonPhysicalStateError("reconstruct: " + std::to_string(out.rejected) + " of " +
                                std::to_string(samples) +
                                " draws were non-physical (rejection rate above 50%)");
  }
  out.mean_fidelity = mean;
  out.fidelity_sigma =
      out.accepted > 1 ? std::sqrt(m2 / static_cast<double>(out.accepted - 1)) : 0.0;
  return out;
}

}  // namespace qfc
