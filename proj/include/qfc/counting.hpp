// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qfc/error.hpp"
#include "qfc/format.hpp"
#include "qfc/hom.hpp"
#include "qfc/parallel.hpp"
#include "qfc/rng.hpp"

namespace qfc {

/// Lumped detection model: all optical losses are folded into the two
/// efficiencies.
struct DetectorModel {
  double efficiency_signal = 0.1;
  double efficiency_idler = 0.1;
  double dark_rate = 100.0;          // counts/s per detector
  double coincidence_window = 1e-9;  // s

  void validate() const {
    if (!(efficiency_signal >= 0.0 && efficiency_signal <= 1.0) ||
        !(efficiency_idler >= 0.0 && efficiency_idler <= 1.0))
      throw DomainError("DetectorModel: efficiencies must lie in [0, 1]");
    if (!(dark_rate >= 0.0)) throw DomainError("DetectorModel: dark rate must be non-negative");
    if (!(coincidence_window > 0.0))
      throw DomainError("DetectorModel: coincidence window must be positive");
  }
};

struct ScanConfig {
  double tau_start = 0.0;  // s
  double tau_stop = 0.0;   // s
  double tau_step = 0.0;   // s
  double dwell = 1.0;      // s per point
  /// Sub-samples averaged across each step (delay-resolution blur); 1 = point sample.
  int averaging = 1;

  void validate() const {
    if (!(tau_step > 0.0)) throw DomainError("ScanConfig: tau_step must be positive");
    if (!(tau_stop > tau_start)) throw DomainError("ScanConfig: tau_stop must exceed tau_start");
    if (!(dwell >= 0.0)) throw DomainError("ScanConfig: dwell must be non-negative");
    if (averaging < 1) throw DomainError("ScanConfig: averaging must be >= 1");
  }

  std::size_t point_count() const {
    return static_cast<std::size_t>(std::floor((tau_stop - tau_start) / tau_step + 1e-9)) + 1;
  }

  double tau_at(std::size_t j) const { return tau_start + static_cast<double>(j) * tau_step; }
};

struct FringePoint {
  double tau;  // s
  std::int64_t counts;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Delay-scan record; taus strictly increasing, counts non-negative.
struct FringeDataset {
  std::vector<FringePoint> points;
  double dwell = 0.0;
  Metadata metadata;

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].counts < 0) throw DomainError("FringeDataset: negative count");
      if (i > 0 && !(points[i].tau > points[i - 1].tau))
        throw DomainError("FringeDataset: delays must be strictly increasing");
    }
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return &v;
    return nullptr;
  }
};

/// Uncorrelated coincidences from the product formula S_s * S_i * window.
/// With several multiplexed pairs, pass the summed singles of all channels
/// on each side; partner and non-partner channels both enter the product.
inline double accidental_rate(double singles_signal, double singles_idler, double window) {
  if (!(singles_signal >= 0.0) || !(singles_idler >= 0.0) || !(window >= 0.0))
    throw DomainError("accidental_rate: rates and window must be non-negative");
  return singles_signal * singles_idler * window;
}

/// Per-detector singles when `pairs` channel pairs each emit `pair_rate`.
inline std::pair<double, double> multiplexed_singles(const DetectorModel& det, double pair_rate,
                                                     std::size_t pairs) {
  const double m = static_cast<double>(pairs);
  return {m * pair_rate * det.efficiency_signal + det.dark_rate,
          m * pair_rate * det.efficiency_idler + det.dark_rate};
}

/// Expected coincidences per point: dwell * [M pair_rate eta_s eta_i p(tau) + R_acc],
/// with p from hom_multi averaged over the scan's sub-samples.
inline double expected_coincidences(const FringeModel& fringe, const ScanConfig& scan,
                                    const DetectorModel& det, double pair_rate, double tau) {
  const double m = static_cast<double>(fringe.pairs.size());
  double p = 0.0;
  for (int s = 0; s < scan.averaging; ++s) {
    const double offset = ((s + 0.5) / scan.averaging - 0.5) * scan.tau_step;
    p += hom_multi(fringe, tau + (scan.averaging > 1 ? offset : 0.0));
  }
  p /= scan.averaging;
  const auto [s_sig, s_idl] = multiplexed_singles(det, pair_rate, fringe.pairs.size());
  const double acc = accidental_rate(s_sig, s_idl, det.coincidence_window);
  return scan.dwell * (m * pair_rate * det.efficiency_signal * det.efficiency_idler * p + acc);
}

/// Poisson-sampled delay scan. Point j draws from the counter slot
/// (seed, fringe stream, j), so the result is independent of `threads`.
inline FringeDataset simulate_fringe(const FringeModel& fringe, const ScanConfig& scan,
                                     const DetectorModel& det, double pair_rate,
                                     std::uint64_t seed, unsigned threads = 1) {
  scan.validate();
  det.validate();
  if (!(pair_rate >= 0.0)) throw DomainError("simulate_fringe: pair_rate must be non-negative");
  if (fringe.pairs.empty()) throw DomainError("simulate_fringe: fringe model holds no pairs");

  FringeDataset data;
  data.dwell = scan.dwell;
  data.points.resize(scan.point_count());
  parallel_for(data.points.size(), threads, [&](std::size_t j) {
    const double tau = scan.tau_at(j);
    const double mean = expected_coincidences(fringe, scan, det, pair_rate, tau);
    CounterRng rng(seed, RngStream::fringe, j);
    data.points[j] = {tau, rng.poisson(mean)};
  });

  auto put = [&](std::string key, std::string value) {
    data.metadata.emplace_back(std::move(key), std::move(value));
  };
  put("seed", std::to_string(seed));
  put("pairs", std::to_string(fringe.pairs.size()));
  put("pair_rate", format_double(pair_rate));
  put("efficiency_signal", format_double(det.efficiency_signal));
  put("efficiency_idler", format_double(det.efficiency_idler));
  put("dark_rate", format_double(det.dark_rate));
  put("coincidence_window_s", format_double(det.coincidence_window));
  put("tau0_s", format_double(fringe.tau0));
  put("alpha", format_double(fringe.alpha));
  put("fwhm_hz", format_double(fringe.envelope.fwhm_hz()));
  std::string detunings;
  for (const auto& c : fringe.pairs) {
    if (!detunings.empty()) detunings += ' ';
    detunings += format_double(c.detuning_hz);
  }
  put("detunings_hz", detunings);
  put("mode", fringe.mode == HomMode::normalized ? "normalized" : "product");
  return data;
}

struct BasisCounts {
  std::int64_t n_si;
  std::int64_t n_is;
};

/// Counts in |w_s w_i> and |w_i w_s>: Poisson with means R*T*p and R*T*(1-p).
inline BasisCounts computational_basis_counts(double p, double total_rate, double dwell,
                                              std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("computational_basis_counts: p outside [0, 1]");
  if (!(total_rate >= 0.0) || !(dwell >= 0.0))
    throw DomainError("computational_basis_counts: rate and dwell must be non-negative");
  const double total = total_rate * dwell;
  CounterRng first(seed, RngStream::basis_counts, 0);
  CounterRng second(seed, RngStream::basis_counts, 1);
  return {first.poisson(total * p), second.poisson(total * (1.0 - p))};
}

}  // namespace qfc
