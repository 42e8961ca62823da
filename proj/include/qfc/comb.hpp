// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "qfc/error.hpp"
#include "qfc/units.hpp"

namespace qfc {

/// Microring resonance grid: equally spaced Lorentzian lines around the pump.
///
/// A single linewidth is used for the whole comb; per-line dispersion of the
/// linewidth or FSR is not modeled.
class ResonatorModel {
 public:
  ResonatorModel(Frequency pump, Frequency fsr, Frequency fwhm, double extinction)
      : pump_(pump), fsr_(fsr), fwhm_(fwhm), extinction_(extinction) {
    if (pump.hz() <= 0 || fsr.hz() <= 0 || fwhm.hz() <= 0)
      throw DomainError("ResonatorModel: frequencies must be positive");
    if (fwhm >= fsr) throw DomainError("ResonatorModel: fwhm must be smaller than fsr");
    if (!(extinction >= 0.0 && extinction <= 1.0))
      throw DomainError("ResonatorModel: extinction must lie in [0, 1]");
  }

  /// 193.5 THz pump, 99.03 GHz FSR, 190.41 MHz FWHM, extinction 0.9.
  static ResonatorModel paper_default() {
    return {Frequency::from_hz(std::int64_t{193'500'000'000'000}),
            Frequency::from_hz(std::int64_t{99'030'000'000}),
            Frequency::from_hz(std::int64_t{190'410'000}), 0.9};
  }

  Frequency pump() const { return pump_; }
  Frequency fsr() const { return fsr_; }
  Frequency fwhm() const { return fwhm_; }
  double extinction() const { return extinction_; }

  Frequency line_center(std::int64_t k) const { return pump_ + fsr_ * k; }

  /// Index of the resonance closest to f (ties resolve toward higher k).
  std::int64_t nearest_index(double f_hz) const {
    return static_cast<std::int64_t>(std::floor((f_hz - pump_.hz_f()) / fsr_.hz_f() + 0.5));
  }

  /// Angular linewidth sigma = 2*pi*fwhm in rad/s; sets the HOM envelope.
  double angular_linewidth() const { return kTwoPi * fwhm_.hz_f(); }

 private:
  Frequency pump_;
  Frequency fsr_;
  Frequency fwhm_;
  double extinction_;
};

struct CombLine {
  std::int64_t index;  // k, offset from the pump in FSR units
  Frequency center;
  Frequency fwhm;

  bool operator==(const CombLine&) const = default;
};

/// Signal/idler lines placed symmetrically at k = -m and k = +m.
struct FrequencyPair {
  int m;
  CombLine signal;
  CombLine idler;
  Frequency detuning;  // idler.center - signal.center = 2 m fsr
};

struct FrequencyBand {
  Frequency lower;
  Frequency upper;
};

/// All resonances with lower <= center <= upper, ascending.
inline std::vector<CombLine> resonance_lines(const ResonatorModel& model, FrequencyBand band) {
  if (band.lower.hz() <= 0 || band.upper.hz() <= 0)
    throw DomainError("resonance_lines: band bounds must be positive");
  if (band.lower >= band.upper) throw DomainError("resonance_lines: empty band (lower >= upper)");
  const std::int64_t fsr = model.fsr().hz();
  const std::int64_t k_lo = ceil_div((band.lower - model.pump()).hz(), fsr);
  const std::int64_t k_hi = floor_div((band.upper - model.pump()).hz(), fsr);
  std::vector<CombLine> lines;
  for (std::int64_t k = k_lo; k <= k_hi; ++k)
    lines.push_back({k, model.line_center(k), model.fwhm()});
  return lines;
}

/// Unit-peak Lorentzian with the given FWHM, evaluated at a detuning.
inline double lorentzian(double detuning_hz, double fwhm_hz) {
  const double half = 0.5 * fwhm_hz;
  return half * half / (detuning_hz * detuning_hz + half * half);
}

/// T(f) = 1 - extinction * L(f - nearest resonance).
inline double transmission(const ResonatorModel& model, double f_hz) {
  if (!(f_hz > 0.0)) throw DomainError("transmission: frequency must be positive");
  const Frequency center = model.line_center(model.nearest_index(f_hz));
  // Subtract in integer Hz first so the detuning keeps full precision near the line.
  const auto whole = static_cast<std::int64_t>(std::floor(f_hz));
  const double detuning = static_cast<double>(whole - center.hz()) + (f_hz - static_cast<double>(whole));
  return 1.0 - model.extinction() * lorentzian(detuning, model.fwhm().hz_f());
}

inline double q_factor(double center_hz, double fwhm_hz) {
  if (!(center_hz > 0.0) || !(fwhm_hz > 0.0))
    throw DomainError("q_factor: center and fwhm must be positive");
  return center_hz / fwhm_hz;
}

inline FrequencyPair pair_for_index(const ResonatorModel& model, int m) {
  if (m == 0) throw DomainError("pair_for_index: m = 0 is the degenerate pump mode");
  if (m < 0) throw DomainError("pair_for_index: pair index must be positive");
  const CombLine signal{-m, model.line_center(-m), model.fwhm()};
  const CombLine idler{m, model.line_center(m), model.fwhm()};
  return {m, signal, idler, idler.center - signal.center};
}

}  // namespace qfc
