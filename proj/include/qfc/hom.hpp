// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "qfc/error.hpp"
#include "qfc/units.hpp"

namespace qfc {

/// Lorentzian-lineshape HOM envelope; sigma is the angular FWHM 2*pi*fwhm.
struct Envelope {
  double sigma;  // rad/s

  static Envelope from_fwhm_hz(double fwhm_hz) {
    if (!(fwhm_hz > 0.0)) throw DomainError("Envelope: fwhm must be positive");
    return {kTwoPi * fwhm_hz};
  }
  double fwhm_hz() const { return sigma / kTwoPi; }
};

/// E(tau) = (1 + sigma|tau|) exp(-sigma|tau|), the normalized Fourier
/// transform of the squared Lorentzian |f(W)|^2 at 2*tau.
inline double envelope_value(const Envelope& env, double tau) {
  const double x = env.sigma * std::abs(tau);
  return (1.0 + x) * std::exp(-x);
}

struct BeatComponent {
  double detuning_hz;  // idler - signal
  double visibility;   // in [0, 1]
  double phase;        // radians
};

enum class HomMode {
  /// 1/2 [1 - V cos(...) E]: only the beat is damped, baseline stays at 1/2.
  normalized,
  /// 1/2 [1 - V cos(...)] * E: literal product form, decays to zero.
  product,
};

struct FringeModel {
  std::vector<BeatComponent> pairs;
  double tau0 = 0.0;   // s, common delay offset
  double alpha = 0.0;  // accidental fraction
  Envelope envelope{kTwoPi * 190.41e6};
  HomMode mode = HomMode::normalized;
};

namespace detail {

inline double component_probability(const BeatComponent& c, double dt, double e, HomMode mode) {
  const double beat = std::cos(kTwoPi * c.detuning_hz * dt + c.phase);
  return mode == HomMode::normalized ? 0.5 * (1.0 - c.visibility * beat * e)
                                     : 0.5 * (1.0 - c.visibility * beat) * e;
}

}  // namespace detail

/// Coincidence probability of a single signal/idler pair at delay tau.
inline double hom_single(const FringeModel& model, double tau) {
  if (model.pairs.size() != 1) throw DomainError("hom_single: model must hold exactly one pair");
  const double dt = tau - model.tau0;
  const double p = detail::component_probability(model.pairs.front(), dt,
                                                 envelope_value(model.envelope, dt), model.mode);
  return std::clamp(p, 0.0, 1.0);
}

/// Pair-averaged coincidence probability with a flat accidental floor:
/// (1 - alpha) (1/M) sum_m p_m(tau) + alpha/2.
inline double hom_multi(const FringeModel& model, double tau) {
  if (model.pairs.empty()) throw DomainError("hom_multi: model holds no pairs");
  const double dt = tau - model.tau0;
  const double e = envelope_value(model.envelope, dt);
  double sum = 0.0;
  for (const auto& c : model.pairs) sum += detail::component_probability(c, dt, e, model.mode);
  const double m = static_cast<double>(model.pairs.size());
  const double p = (1.0 - model.alpha) * sum / m + 0.5 * model.alpha;
  return std::clamp(p, 0.0, 1.0);
}

inline double oscillation_period(double detuning_hz) {
  if (!(detuning_hz > 0.0)) throw DomainError("oscillation_period: detuning must be positive");
  return 1.0 / detuning_hz;
}

/// Dip recurrence for pairs spaced by 2*fsr in detuning.
inline double revival_period(double fsr_hz) {
  if (!(fsr_hz > 0.0)) throw DomainError("revival_period: fsr must be positive");
  return 1.0 / (2.0 * fsr_hz);
}

/// Model with pairs m in `indices`, detuning 2 m fsr and shared V and phase.
inline FringeModel comb_fringe_model(const std::vector<int>& indices, double fsr_hz,
                                     double visibility, double phase, Envelope env,
                                     double tau0 = 0.0, double alpha = 0.0) {
  FringeModel model;
  for (int m : indices) model.pairs.push_back({2.0 * m * fsr_hz, visibility, phase});
  model.tau0 = tau0;
  model.alpha = alpha;
  model.envelope = env;
  return model;
}

/// Full width of the central dip at half depth, measured between the
/// baseline 1/2 and the value at tau0. Crossings are bracketed on a grid of
/// `step` and refined by bisection.
inline double central_dip_fwhm(const FringeModel& model, double step, double max_offset) {
  const double bottom = hom_multi(model, model.tau0);
  const double level = 0.5 * (bottom + 0.5);
  auto side = [&](double dir) {
    auto f = [&](double t) { return hom_multi(model, model.tau0 + dir * t) - level; };
    const bool below = f(0.0) < 0.0;
    double prev = 0.0;
    for (double t = step; t <= max_offset; t += step) {
      if ((f(t) < 0.0) != below) {
        double lo = prev, hi = t;
        for (int i = 0; i < 200 && hi - lo > 1e-22; ++i) {
          const double mid = 0.5 * (lo + hi);
          if ((f(mid) < 0.0) == below) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
      }
      prev = t;
    }
    throw DomainError("central_dip_fwhm: no half-depth crossing within range");
  };
  return side(+1.0) + side(-1.0);
}

}  // namespace qfc
