// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qfc/comb.hpp"
#include "qfc/error.hpp"
#include "qfc/parallel.hpp"
#include "qfc/rng.hpp"
#include "qfc/units.hpp"

namespace qfc {

/// Ideal rectangular passband [center - width/2, center + width/2).
struct Passband {
  Frequency center;
  Frequency width;
  int output_port = 1;

  // Edge tests are done on doubled values so odd widths stay exact.
  bool contains(Frequency f) const {
    const std::int64_t twice = 2 * f.hz();
    return twice >= 2 * center.hz() - width.hz() && twice < 2 * center.hz() + width.hz();
  }
  double lower_hz() const { return center.hz_f() - 0.5 * width.hz_f(); }
  double upper_hz() const { return center.hz_f() + 0.5 * width.hz_f(); }

  bool overlaps(const Passband& o) const {
    return 2 * center.hz() - width.hz() < 2 * o.center.hz() + o.width.hz() &&
           2 * o.center.hz() - o.width.hz() < 2 * center.hz() + width.hz();
  }
};

inline constexpr Frequency kDefaultChannelWidth = Frequency::from_hz(std::int64_t{20'000'000'000});

/// Validated set of non-overlapping passbands, sorted by center.
class FilterProgram {
 public:
  explicit FilterProgram(std::vector<Passband> passbands) : passbands_(std::move(passbands)) {
    for (const auto& band : passbands_)
      if (band.width.hz() <= 0) throw ConfigError("FilterProgram: passband width must be positive");
    std::sort(passbands_.begin(), passbands_.end(),
              [](const Passband& a, const Passband& b) { return a.center < b.center; });
    for (std::size_t i = 1; i < passbands_.size(); ++i) {
      if (passbands_[i - 1].overlaps(passbands_[i])) {
        throw ConfigError("FilterProgram: passbands at " +
                          std::to_string(passbands_[i - 1].center.ghz()) + " GHz and " +
                          std::to_string(passbands_[i].center.ghz()) + " GHz overlap");
      }
    }
  }

  const std::vector<Passband>& passbands() const { return passbands_; }

  /// Port whose passband contains f, or 0 when the frequency is blocked.
  int port_for(Frequency f) const {
    for (const auto& band : passbands_)
      if (band.contains(f)) return band.output_port;
    return 0;
  }

 private:
  std::vector<Passband> passbands_;
};

/// Routes each line by its center frequency; blocked lines are dropped.
inline std::map<int, std::vector<CombLine>> route_lines(const FilterProgram& program,
                                                        const std::vector<CombLine>& lines) {
  std::map<int, std::vector<CombLine>> routed;
  for (const auto& line : lines) {
    const int port = program.port_for(line.center);
    if (port != 0) routed[port].push_back(line);
  }
  return routed;
}

inline constexpr int kSignalPort = 1;
inline constexpr int kIdlerPort = 2;

/// Two-port program passing the signal lines of the selected pairs on port 1
/// and their idlers on port 2. Runs of consecutive indices share one widened
/// passband spanning the run plus half a channel width on each side.
inline FilterProgram select_pairs(const ResonatorModel& model, const std::set<int>& pair_indices,
                                  Frequency channel_width = kDefaultChannelWidth) {
  if (pair_indices.empty()) throw DomainError("select_pairs: no pair indices given");
  if (*pair_indices.begin() < 1) throw DomainError("select_pairs: pair indices must be >= 1");
  if (channel_width.hz() <= 0 || channel_width >= model.fsr())
    throw DomainError("select_pairs: channel width must lie in (0, fsr)");

  std::vector<Passband> bands;
  auto emit_run = [&](int first, int last) {
    // Signal side covers k in [-last, -first], idler side k in [first, last].
    for (int sign : {-1, +1}) {
      const Frequency a = model.line_center(sign * first);
      const Frequency b = model.line_center(sign * last);
      const Frequency lo = std::min(a, b);
      const Frequency hi = std::max(a, b);
      const Frequency width = hi - lo + channel_width;
      // lo + hi is even whenever fsr is; otherwise widen by 1 Hz to stay centered.
      const std::int64_t sum = lo.hz() + hi.hz();
      const Frequency center = Frequency::from_hz(sum / 2);
      const Frequency pad = Frequency::from_hz(static_cast<std::int64_t>(sum % 2 != 0));
      bands.push_back({center, width + pad, sign < 0 ? kSignalPort : kIdlerPort});
    }
  };
  int run_start = *pair_indices.begin();
  int prev = run_start;
  for (auto it = std::next(pair_indices.begin()); it != pair_indices.end(); ++it) {
    if (*it != prev + 1) {
      emit_run(run_start, prev);
      run_start = *it;
    }
    prev = *it;
  }
  emit_run(run_start, prev);
  return FilterProgram(std::move(bands));
}

/// Each line's Lorentzian is truncated at +/- this many FWHM and renormalized,
/// so a passband that does not reach a line's support captures none of it.
inline constexpr double kLineSupportFwhms = 50.0;

/// Fraction of one line's (truncated) Lorentzian power inside [lower, upper].
inline double captured_fraction(double line_center_hz, double fwhm_hz, double lower_hz,
                                double upper_hz) {
  const double support = kLineSupportFwhms * fwhm_hz;
  const double lo = std::max(lower_hz, line_center_hz - support);
  const double hi = std::min(upper_hz, line_center_hz + support);
  if (!(hi > lo)) return 0.0;
  const double half = 0.5 * fwhm_hz;
  const double norm = 2.0 * std::atan(support / half);
  return (std::atan((hi - line_center_hz) / half) - std::atan((lo - line_center_hz) / half)) / norm;
}

/// Summed captured fraction of all comb lines inside a passband.
inline double passband_overlap(const ResonatorModel& model, double lower_hz, double upper_hz) {
  const double reach = kLineSupportFwhms * model.fwhm().hz_f();
  const std::int64_t k_lo = model.nearest_index(lower_hz - reach) - 1;
  const std::int64_t k_hi = model.nearest_index(upper_hz + reach) + 1;
  double overlap = 0.0;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    overlap += captured_fraction(model.line_center(k).hz_f(), model.fwhm().hz_f(), lower_hz,
                                 upper_hz);
  }
  return overlap;
}

struct SinglesScanSettings {
  FrequencyBand band;     // scan centers pump + j*step that fall inside the band
  Frequency step;
  Frequency width;
  double line_flux = 0.0;  // counts/s from one fully captured line
  double dark_rate = 0.0;  // counts/s
  double dwell = 1.0;      // s
  std::uint64_t seed = 0;
};

struct SinglesScanPoint {
  std::int64_t grid_index;  // j, with center = pump + j*step
  Frequency center;
  double mean;
  std::int64_t counts;
};

/// Single-photon spectrum recorded by stepping one passband across the comb.
/// Draws are keyed by (seed, grid index), so overlapping scans agree point by point.
inline std::vector<SinglesScanPoint> singles_spectrum_scan(const ResonatorModel& model,
                                                           const SinglesScanSettings& s,
                                                           unsigned threads = 1) {
  if (s.step.hz() <= 0 || s.width.hz() <= 0 || !(s.dwell > 0.0))
    throw DomainError("singles_spectrum_scan: step, width and dwell must be positive");
  if (s.band.lower >= s.band.upper) throw DomainError("singles_spectrum_scan: empty band");
  const std::int64_t j_lo = ceil_div((s.band.lower - model.pump()).hz(), s.step.hz());
  const std::int64_t j_hi = floor_div((s.band.upper - model.pump()).hz(), s.step.hz());
  if (j_hi < j_lo) return {};
  std::vector<SinglesScanPoint> points(static_cast<std::size_t>(j_hi - j_lo + 1));
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const std::int64_t j = j_lo + static_cast<std::int64_t>(i);
    const Frequency center = model.pump() + s.step * j;
    const double half = 0.5 * s.width.hz_f();
    const double overlap = passband_overlap(model, center.hz_f() - half, center.hz_f() + half);
    const double mean = s.dwell * (s.dark_rate + s.line_flux * overlap);
    CounterRng rng(s.seed, RngStream::singles_scan, static_cast<std::uint64_t>(j));
    points[i] = {j, center, mean, rng.poisson(mean)};
  });
  return points;
}

}  // namespace qfc
