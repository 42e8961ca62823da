// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfc/comb.hpp"
#include "qfc/error.hpp"
#include "qfc/units.hpp"

namespace qfc {

using Complex = std::complex<double>;

//---------------------------------------------------------------------------//
// Frequency-bin entangled biphoton
//---------------------------------------------------------------------------//

struct PairComponent {
  FrequencyPair pair;
  double weight;  // probability weight of this pair in the superposition
  double theta;   // exchange phase in [0, 2*pi)
};

/// Superposition over M signal/idler pairs, each in
/// (|w_s w_i> + e^{i theta} |w_i w_s>) / sqrt(2).
///
/// Weights are stored normalized to sum to one; an equal-weight state of M
/// pairs therefore carries amplitude 1/sqrt(2M) on each of its 2M kets.
class FrequencyBinState {
 public:
  const std::vector<PairComponent>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

  /// Amplitude of |w_s,m w_i,m> (first = true) or |w_i,m w_s,m> (first = false).
  Complex amplitude(std::size_t m, bool first) const {
    const auto& c = pairs_.at(m);
    const double a = std::sqrt(c.weight / 2.0);
    return first ? Complex(a, 0.0) : std::polar(a, c.theta);
  }

  /// Two-photon ket of pair m in the basis {|ss>, |si>, |is>, |ii>}.
  Eigen::Vector4cd pair_ket(std::size_t m) const {
    const double theta = pairs_.at(m).theta;
    Eigen::Vector4cd ket = Eigen::Vector4cd::Zero();
    ket(1) = 1.0 / std::sqrt(2.0);
    ket(2) = std::polar(1.0 / std::sqrt(2.0), theta);
    return ket;
  }

  double norm_squared() const {
    double total = 0.0;
    for (std::size_t m = 0; m < pairs_.size(); ++m)
      total += std::norm(amplitude(m, true)) + std::norm(amplitude(m, false));
    return total;
  }

 private:
  friend FrequencyBinState frequency_bin_state(const std::vector<FrequencyPair>&,
                                               const std::vector<double>&,
                                               const std::vector<double>&);
  std::vector<PairComponent> pairs_;
};

inline FrequencyBinState frequency_bin_state(const std::vector<FrequencyPair>& pairs,
                                             const std::vector<double>& thetas,
                                             const std::vector<double>& weights) {
  if (pairs.empty()) throw DomainError("frequency_bin_state: empty pair list");
  if (thetas.size() != pairs.size() || weights.size() != pairs.size())
    throw DomainError("frequency_bin_state: pairs, thetas and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("frequency_bin_state: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("frequency_bin_state: weights sum to zero");
  FrequencyBinState state;
  for (std::size_t m = 0; m < pairs.size(); ++m)
    state.pairs_.push_back({pairs[m], weights[m] / total, wrap_two_pi(thetas[m])});
  return state;
}

/// Equal-weight convenience overload.
inline FrequencyBinState frequency_bin_state(const std::vector<FrequencyPair>& pairs,
                                             const std::vector<double>& thetas) {
  return frequency_bin_state(pairs, thetas, std::vector<double>(pairs.size(), 1.0));
}

//---------------------------------------------------------------------------//
// Waveplates (Jones calculus)
//---------------------------------------------------------------------------//

enum class WaveplateKind { quarter, half };

struct Waveplate {
  WaveplateKind kind;
  double fast_axis;  // radians from horizontal
};

using WaveplateStack = std::vector<Waveplate>;
using JonesMatrix = Eigen::Matrix2cd;

/// Linear retarder: R(-a) diag(e^{-i d/2}, e^{+i d/2}) R(a), fast axis at angle a.
inline JonesMatrix retarder(double retardance, double fast_axis) {
  const double c = std::cos(fast_axis);
  const double s = std::sin(fast_axis);
  Eigen::Matrix2d rot;
  rot << c, s, -s, c;
  JonesMatrix phase = JonesMatrix::Zero();
  phase(0, 0) = std::polar(1.0, -0.5 * retardance);
  phase(1, 1) = std::polar(1.0, 0.5 * retardance);
  return rot.transpose().cast<Complex>() * phase * rot.cast<Complex>();
}

inline JonesMatrix jones_matrix(const Waveplate& plate) {
  return retarder(plate.kind == WaveplateKind::quarter ? kPi / 2.0 : kPi, plate.fast_axis);
}

/// Product of the stack's Jones matrices; element 0 is the first plate the
/// light traverses.
inline JonesMatrix compose_waveplates(const WaveplateStack& stack) {
  JonesMatrix total = JonesMatrix::Identity();
  for (const auto& plate : stack) total = jones_matrix(plate) * total;
  return total;
}

inline constexpr double kPhaseGateTolerance = 1e-9;

/// Relative phase arg(U11 / U00) in [0, 2*pi) of a stack acting as a pure
/// H/V phase gate. Anything with off-diagonal leakage is a ModelError.
inline double phase_from_stack(const WaveplateStack& stack) {
  const JonesMatrix u = compose_waveplates(stack);
  const double leakage = std::max(std::abs(u(0, 1)), std::abs(u(1, 0)));
  if (leakage > kPhaseGateTolerance ||
      std::abs(std::abs(u(0, 0)) - 1.0) > kPhaseGateTolerance ||
      std::abs(std::abs(u(1, 1)) - 1.0) > kPhaseGateTolerance) {
    throw ModelError("phase_from_stack: stack is not a pure relative-phase gate (leakage " +
                     std::to_string(leakage) + ")");
  }
  return wrap_two_pi(std::arg(u(1, 1) / u(0, 0)));
}

/// QWP(45 deg) - HWP(alpha) - QWP(45 deg).
inline WaveplateStack phase_control_stack(double hwp_angle) {
  return {{WaveplateKind::quarter, kPi / 4.0},
          {WaveplateKind::half, hwp_angle},
          {WaveplateKind::quarter, kPi / 4.0}};
}

/// HWP angle alpha in [0, pi/2) whose QWP-HWP-QWP stack realizes theta.
///
/// The alpha -> theta map is not assumed; it is sampled from the Jones
/// model and inverted by bracketing plus bisection.
inline double hwp_angle_for_phase(double theta) {
  const double target = wrap_two_pi(theta);
  auto mismatch = [&](double alpha) {
    return wrap_pi(phase_from_stack(phase_control_stack(alpha)) - target);
  };
  constexpr int kSamples = 64;
  const double span = kPi / 2.0;
  double prev_a = 0.0;
  double prev_m = mismatch(prev_a);
  if (std::abs(prev_m) < 1e-15) return 0.0;
  for (int i = 1; i <= kSamples; ++i) {
    const double a = span * i / kSamples;
    const double m = mismatch(a);
    // A genuine root brackets with a small jump; a wrap-around jumps by ~2*pi.
    if ((prev_m <= 0.0) != (m <= 0.0) && std::abs(m - prev_m) < kPi) {
      double lo = prev_a, hi = a, m_lo = prev_m;
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double m_mid = mismatch(mid);
        if ((m_mid <= 0.0) == (m_lo <= 0.0)) {
          lo = mid;
          m_lo = m_mid;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      return root >= span ? root - span : root;
    }
    prev_a = a;
    prev_m = m;
  }
  throw ModelError("hwp_angle_for_phase: no HWP angle realizes the requested phase");
}

inline WaveplateStack stack_for_phase(double theta) {
  return phase_control_stack(hwp_angle_for_phase(theta));
}

//---------------------------------------------------------------------------//
// Restricted density matrix
//---------------------------------------------------------------------------//

inline constexpr double kPhysicalityTolerance = 1e-12;

/// (p - 1/2)^2 + V^2/4 <= 1/4, i.e. the central block is positive semidefinite.
inline bool is_physical(double p, double visibility) {
  const double d = p - 0.5;
  return d * d + 0.25 * visibility * visibility <= 0.25 + kPhysicalityTolerance;
}

/// Two-photon state confined to the single-excitation block,
/// basis {|ss>, |si>, |is>, |ii>}:
///
///   [ p              (V/2) e^{-i phi} ]
///   [ (V/2) e^{i phi}   1 - p         ]
class RestrictedDensityMatrix {
 public:
  double balance() const { return p_; }
  double visibility() const { return v_; }
  double phase() const { return phi_; }

  Eigen::Matrix4cd matrix() const {
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    rho(1, 1) = p_;
    rho(2, 2) = 1.0 - p_;
    rho(1, 2) = std::polar(0.5 * v_, -phi_);
    rho(2, 1) = std::polar(0.5 * v_, phi_);
    return rho;
  }

 private:
  friend RestrictedDensityMatrix restricted_density(double, double, double);
  RestrictedDensityMatrix(double p, double v, double phi) : p_(p), v_(v), phi_(phi) {}
  double p_;
  double v_;
  double phi_;
};

inline RestrictedDensityMatrix restricted_density(double p, double visibility, double phi) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("restricted_density: p must lie in [0, 1]");
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw DomainError("restricted_density: V must lie in [0, 1]");
  if (!is_physical(p, visibility)) {
    throw NonPhysicalStateError("restricted_density: (p - 1/2)^2 + V^2/4 > 1/4 for p = " +
                                std::to_string(p) + ", V = " + std::to_string(visibility));
  }
  return {p, visibility, phi};
}

/// <psi|rho|psi> with |psi> = (|si> + e^{i theta}|is>)/sqrt(2); closed form.
inline double fidelity(const RestrictedDensityMatrix& rho, double theta_target) {
  return 0.5 + 0.5 * rho.visibility() * std::cos(rho.phase() - theta_target);
}

inline Eigen::Vector4cd target_state(double theta_target) {
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  psi(1) = 1.0 / std::sqrt(2.0);
  psi(2) = std::polar(1.0 / std::sqrt(2.0), theta_target);
  return psi;
}

/// Same quantity evaluated as an explicit vector-matrix-vector product.
inline double fidelity_by_sandwich(const RestrictedDensityMatrix& rho, double theta_target) {
  const Eigen::Vector4cd psi = target_state(theta_target);
  return (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
}

}  // namespace qfc
