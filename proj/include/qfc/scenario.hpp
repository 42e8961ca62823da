// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qfc/comb.hpp"
#include "qfc/config.hpp"
#include "qfc/counting.hpp"
#include "qfc/error.hpp"
#include "qfc/fit.hpp"
#include "qfc/format.hpp"
#include "qfc/hom.hpp"
#include "qfc/io.hpp"
#include "qfc/rng.hpp"
#include "qfc/states.hpp"
#include "qfc/units.hpp"
#include "qfc/wss.hpp"

#ifndef QFCOMB_VERSION
#define QFCOMB_VERSION "unknown"
#endif

namespace qfc {

inline constexpr const char* kToolName = "qfcsim";
inline constexpr const char* kVersion = QFCOMB_VERSION;

/// Ordered "key = value" lines for summaries and manifests.
class Report {
 public:
  void add(std::string key, std::string value) { lines_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_double(value)); }
  void add(std::string key, std::int64_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, int value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }

  const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }
  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : lines_)
      if (k == key) return &v;
    return nullptr;
  }
  std::string str() const {
    std::string out;
    for (const auto& [k, v] : lines_) out += k + " = " + v + '\n';
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

//---------------------------------------------------------------------------//
// Shared pieces
//---------------------------------------------------------------------------//

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline LmOptions lm_options(const ScenarioConfig& cfg) {
  LmOptions lm;
  lm.relative_tolerance = cfg.fit.relative_tolerance;
  lm.max_iterations = cfg.fit.max_iterations;
  return lm;
}

inline Envelope resonator_envelope(const ScenarioConfig& cfg) {
  return Envelope::from_fwhm_hz(cfg.resonator.model().fwhm().hz_f());
}

inline std::vector<double> pair_detunings(const ScenarioConfig& cfg, const std::vector<int>& pairs) {
  const double fsr = cfg.resonator.model().fsr().hz_f();
  std::vector<double> out;
  for (int m : pairs) out.push_back(2.0 * m * fsr);
  return out;
}

/// Accidental floor written as the fraction alpha of hom_multi: with true
/// rate R_t and accidental rate A, counts ~ (R_t + 2A)[(1 - alpha) p + alpha/2]
/// for alpha = 2A/(R_t + 2A).
inline double accidental_fraction(const ScenarioConfig& cfg, std::size_t pairs) {
  const DetectorModel det = cfg.detector.model();
  const double rate = cfg.source.pair_rate_hz;
  const double true_rate =
      static_cast<double>(pairs) * rate * det.efficiency_signal * det.efficiency_idler;
  const auto [s_sig, s_idl] = multiplexed_singles(det, rate, pairs);
  const double acc = accidental_rate(s_sig, s_idl, det.coincidence_window);
  const double denom = true_rate + 2.0 * acc;
  return denom > 0.0 ? 2.0 * acc / denom : 0.0;
}

inline ScanConfig scan_ps(double start_ps, double stop_ps, double step_ps, double dwell_s) {
  ScanConfig s;
  s.tau_start = start_ps * 1e-12;
  s.tau_stop = stop_ps * 1e-12;
  s.tau_step = step_ps * 1e-12;
  s.dwell = dwell_s;
  return s;
}

/// One simulated delay scan and its fit.
struct FringeRun {
  std::string name;
  std::vector<int> pairs;
  FringeModel truth;
  FringeDataset data;
  FitResult fit;
  FringeModel fitted;
};

inline FringeModel fitted_model(const ScenarioConfig& cfg, const std::vector<int>& pairs,
                                const FitResult& fit, const FringeFitOptions& opt) {
  FringeModel m = comb_fringe_model(pairs, cfg.resonator.model().fsr().hz_f(), fit.value("V"),
                                    fit.value("phi"), opt.envelope,
                                    fit.has("tau0_s") ? fit.value("tau0_s") : opt.fixed_tau0.value_or(0.0),
                                    opt.alpha);
  m.mode = opt.mode;
  if (fit.has("detuning_hz")) m.pairs.front().detuning_hz = fit.value("detuning_hz");
  return m;
}

inline FringeRun simulate_and_fit(const ScenarioConfig& cfg, std::string name,
                                  const std::vector<int>& pairs, double phase_rad,
                                  const ScanConfig& scan, std::uint64_t seed, unsigned threads,
                                  FringeFitOptions opt) {
  FringeRun run;
  run.name = std::move(name);
  run.pairs = pairs;
  run.truth = comb_fringe_model(pairs, cfg.resonator.model().fsr().hz_f(), cfg.source.visibility,
                                phase_rad, opt.envelope, cfg.source.tau0_ps * 1e-12);
  run.truth.mode = opt.mode;
  run.data = simulate_fringe(run.truth, scan, cfg.detector.model(), cfg.source.pair_rate_hz, seed,
                             threads);
  run.data.metadata.emplace_back("pair_indices", format_pair_list(pairs));
  run.data.metadata.emplace_back("phase_rad", format_double(phase_rad));
  run.data.metadata.emplace_back("visibility", format_double(cfg.source.visibility));
  opt.detunings_hz = pair_detunings(cfg, pairs);
  opt.alpha = accidental_fraction(cfg, pairs.size());
  opt.lm = lm_options(cfg);
  run.fit = fit_fringe(run.data, opt);
  run.fitted = fitted_model(cfg, pairs, run.fit, opt);
  return run;
}

inline std::vector<CurvePoint> model_curve(const FringeModel& model, const ScanConfig& scan,
                                           int oversample = 5) {
  std::vector<CurvePoint> out;
  const std::size_t n = (scan.point_count() - 1) * static_cast<std::size_t>(oversample) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = scan.tau_start + static_cast<double>(i) * scan.tau_step / oversample;
    out.push_back({tau * 1e12, hom_multi(model, tau)});
  }
  return out;
}

//---------------------------------------------------------------------------//
// Scenario results
//---------------------------------------------------------------------------//

struct SpectrumResult {
  std::vector<CurvePoint> wide;
  std::vector<CurvePoint> zoom;
  std::vector<SinglesScanPoint> scan;
  FilterProgram program{{}};
  std::map<int, std::vector<CombLine>> routing;
  double q_factor = 0.0;
};

struct Fig2Result {
  FringeDataset coarse;
  ScanConfig coarse_scan;
  EnvelopeFitResult envelope;
  Envelope envelope_used;
  std::vector<double> centers_s;
  std::vector<ScanConfig> fine_scans;
  std::vector<FringeRun> fine;
};

struct Fig3Result {
  FringeRun run;
  ScanConfig scan;
  bool single = true;
  double period = 0.0;        // s, single pair
  double period_sigma = 0.0;  // s
  double revival = 0.0;       // s, multiplexed
  double dip_fwhm = 0.0;      // s, multiplexed
};

struct Fig4Result {
  double phase_deg = 0.0;
  double hwp_angle = 0.0;  // rad
  double gate_phase = 0.0;  // rad, realized by the waveplate stack
  ScanConfig scan;
  FringeRun single;
  FringeRun multi;
};

struct Fig5Result {
  BasisCounts counts;
  Estimate balance;
  ReconstructionResult reconstruction;
  double target_phase = 0.0;
};

//---------------------------------------------------------------------------//
// Scenarios
//---------------------------------------------------------------------------//

inline SpectrumResult run_spectrum(const ScenarioConfig& cfg, std::uint64_t seed, unsigned threads) {
  const ResonatorModel model = cfg.resonator.model();
  const SpectrumConfig& sp = cfg.spectrum;
  SpectrumResult r;
  auto sweep = [&](double start_hz, double stop_hz, double step_hz) {
    std::vector<CurvePoint> out;
    const auto n = static_cast<std::size_t>(std::floor((stop_hz - start_hz) / step_hz + 1e-9)) + 1;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double f = start_hz + static_cast<double>(j) * step_hz;
      out.push_back({f * 1e-12, transmission(model, f)});
    }
    return out;
  };
  r.wide = sweep(sp.wide_start_thz * 1e12, sp.wide_stop_thz * 1e12, sp.wide_step_mhz * 1e6);
  const double pump = model.pump().hz_f();
  r.zoom = sweep(pump - 0.5e9 * sp.zoom_span_ghz, pump + 0.5e9 * sp.zoom_span_ghz, sp.zoom_step_mhz * 1e6);

  SinglesScanSettings s;
  s.band = {Frequency::from_thz(sp.scan_start_thz), Frequency::from_thz(sp.scan_stop_thz)};
  s.step = Frequency::from_ghz(sp.scan_step_ghz);
  s.width = Frequency::from_ghz(cfg.wss.channel_width_ghz);
  s.line_flux = sp.line_flux_hz;
  s.dark_rate = sp.scan_dark_rate_hz;
  s.dwell = sp.scan_dwell_s;
  s.seed = derive_seed(seed, 0);
  r.scan = singles_spectrum_scan(model, s, threads);

  r.program = cfg.wss.passbands.empty()
                  ? select_pairs(model, std::set<int>(cfg.wss.pairs.begin(), cfg.wss.pairs.end()),
                                 Frequency::from_ghz(cfg.wss.channel_width_ghz))
                  : FilterProgram(cfg.wss.passbands);
  r.routing = route_lines(r.program, resonance_lines(model, s.band));
  r.q_factor = q_factor(pump, model.fwhm().hz_f());
  return r;
}

inline Fig2Result run_fig2(const ScenarioConfig& cfg, std::uint64_t seed, unsigned threads) {
  const Fig2Config& f = cfg.fig2;
  const std::vector<int> pairs{f.pair};
  const double tau0 = cfg.source.tau0_ps * 1e-12;
  const double phase = deg_to_rad(cfg.source.phase_deg);
  Fig2Result r;

  // Coarse scan: the beat is not resolved at this step, so counts follow
  // the envelope of the product-form fringe averaged over each step.
  r.coarse_scan = scan_ps(f.coarse_start_ns * 1e3, f.coarse_stop_ns * 1e3, f.coarse_step_ps,
                          f.coarse_dwell_s);
  r.coarse_scan.averaging = f.coarse_averaging;
  FringeModel coarse_truth = comb_fringe_model(pairs, cfg.resonator.model().fsr().hz_f(),
                                               cfg.source.visibility, phase, resonator_envelope(cfg), tau0);
  coarse_truth.mode = HomMode::product;
  r.coarse = simulate_fringe(coarse_truth, r.coarse_scan, cfg.detector.model(), cfg.source.pair_rate_hz,
                             derive_seed(seed, 0), threads);
  r.coarse.metadata.emplace_back("pair_indices", format_pair_list(pairs));
  r.coarse.metadata.emplace_back("averaging", std::to_string(f.coarse_averaging));
  EnvelopeFitOptions eopt;
  eopt.tau0 = tau0;
  eopt.lm = lm_options(cfg);
  r.envelope = fit_envelope(r.coarse, eopt);
  r.envelope_used = r.envelope.ill_conditioned ? resonator_envelope(cfg) : Envelope{r.envelope.sigma};

  // Fine windows: sigma and tau0 held at the values above; V and phi fitted.
  for (std::size_t i = 0; i < f.fine_centers_ns.size(); ++i) {
    const double c_ps = f.fine_centers_ns[i] * 1e3;
    const ScanConfig scan =
        scan_ps(c_ps - f.fine_half_width_ps, c_ps + f.fine_half_width_ps, f.fine_step_ps, f.fine_dwell_s);
    FringeFitOptions opt;
    opt.envelope = r.envelope_used;
    opt.fixed_tau0 = tau0;
    r.centers_s.push_back(c_ps * 1e-12);
    r.fine_scans.push_back(scan);
    r.fine.push_back(simulate_and_fit(cfg, "fine_" + format_double(f.fine_centers_ns[i]) + "ns", pairs,
                                      phase, scan, derive_seed(seed, 1 + i), threads, opt));
  }
  return r;
}

/// Local minimum of the model on [lo, hi], located on a 1 fs grid and refined by golden section.
inline double model_minimum(const FringeModel& m, double lo, double hi) {
  const double step = 1e-15;
  double best = lo, best_v = hom_multi(m, lo);
  for (double t = lo; t <= hi; t += step) {
    const double v = hom_multi(m, t);
    if (v < best_v) {
      best_v = v;
      best = t;
    }
  }
  double a = best - step, b = best + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 100; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (hom_multi(m, c) < hom_multi(m, d)) b = d; else a = c;
  }
  return 0.5 * (a + b);
}

inline Fig3Result run_fig3(const ScenarioConfig& cfg, const std::vector<int>& pairs, std::uint64_t seed,
                           unsigned threads) {
  if (pairs.empty()) throw ConfigError("fig3: no pairs selected");
  const Fig3Config& f = cfg.fig3;
  const double tau0 = cfg.source.tau0_ps * 1e-12;
  const double phase = deg_to_rad(cfg.source.phase_deg);
  Fig3Result r;
  r.single = pairs.size() == 1;
  FringeFitOptions opt;
  opt.envelope = resonator_envelope(cfg);
  if (r.single) {
    r.scan = scan_ps(cfg.source.tau0_ps - f.single_half_width_ps, cfg.source.tau0_ps + f.single_half_width_ps,
                     f.single_step_ps, f.single_dwell_s);
    opt.fixed_tau0 = tau0;
    opt.fit_detuning = true;
    r.run = simulate_and_fit(cfg, "pair_" + format_pair_list(pairs), pairs, phase, r.scan,
                             derive_seed(seed, 0), threads, opt);
    const double det = r.run.fit.value("detuning_hz");
    r.period = 1.0 / det;
    r.period_sigma = r.run.fit.sigma("detuning_hz") / (det * det);
  } else {
    r.scan = scan_ps(cfg.source.tau0_ps + f.multi_start_ps, cfg.source.tau0_ps + f.multi_stop_ps,
                     f.multi_step_ps, f.multi_dwell_s);
    opt.tau0_start = tau0;
    r.run = simulate_and_fit(cfg, "pairs_" + format_pair_list(pairs), pairs, phase, r.scan,
                             derive_seed(seed, 0), threads, opt);
    // Dip recurrence read off the fitted curve: the minimum nearest the
    // fitted tau0 and the next one one expected revival later.
    const double expected = revival_period(cfg.resonator.model().fsr().hz_f());
    const double t0 = r.run.fitted.tau0;
    const double first = model_minimum(r.run.fitted, t0 - 0.25 * expected, t0 + 0.25 * expected);
    const double second = model_minimum(r.run.fitted, first + 0.75 * expected, first + 1.25 * expected);
    r.revival = second - first;
    r.dip_fwhm = central_dip_fwhm(r.run.fitted, 1e-15, 0.5 * expected);
  }
  return r;
}

inline const std::vector<int>& fig4_phase_settings() {
  static const std::vector<int> settings{0, 90, 180, 270};
  return settings;
}

inline Fig4Result run_fig4(const ScenarioConfig& cfg, int phase_deg, std::uint64_t seed, unsigned threads) {
  const auto& allowed = fig4_phase_settings();
  if (std::find(allowed.begin(), allowed.end(), phase_deg) == allowed.end())
    throw ConfigError("fig4: --phase must be one of 0, 90, 180, 270");
  const Fig4Config& f = cfg.fig4;
  Fig4Result r;
  r.phase_deg = phase_deg;
  r.hwp_angle = hwp_angle_for_phase(deg_to_rad(phase_deg));
  r.gate_phase = phase_from_stack(phase_control_stack(r.hwp_angle));
  const double phase = wrap_pi(deg_to_rad(cfg.source.phase_deg) + r.gate_phase);
  r.scan = scan_ps(cfg.source.tau0_ps - f.half_width_ps, cfg.source.tau0_ps + f.half_width_ps, f.step_ps,
                   f.dwell_s);
  FringeFitOptions opt;
  opt.envelope = resonator_envelope(cfg);
  opt.fixed_tau0 = cfg.source.tau0_ps * 1e-12;
  r.single = simulate_and_fit(cfg, "pair_" + std::to_string(f.pair), {f.pair}, phase, r.scan,
                              derive_seed(seed, 0), threads, opt);
  r.multi = simulate_and_fit(cfg, "pairs_" + format_pair_list(f.multi_pairs), f.multi_pairs, phase,
                             r.scan, derive_seed(seed, 1), threads, opt);
  return r;
}

inline Fig5Result run_fig5(const ScenarioConfig& cfg, std::uint64_t seed) {
  const Fig5Config& f = cfg.fig5;
  const BasisCounts counts =
      computational_basis_counts(f.balance, f.basis_rate_hz, f.basis_dwell_s, derive_seed(seed, 0));
  const auto n1 = static_cast<double>(counts.n_si);
  const auto n2 = static_cast<double>(counts.n_is);
  const Estimate balance = estimate_balance({n1, std::sqrt(n1)}, {n2, std::sqrt(n2)});
  const double target = deg_to_rad(f.target_phase_deg);
  return {counts, balance,
          reconstruct(balance, {f.visibility, f.visibility_sigma}, {f.phase_rad, f.phase_sigma_rad},
                      static_cast<std::size_t>(f.samples), derive_seed(seed, 1), target),
          target};
}

//---------------------------------------------------------------------------//
// Artifact writing
//---------------------------------------------------------------------------//

struct RunOptions {
  std::string scenario;
  std::vector<int> pairs{5};
  std::optional<int> phase_deg;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::string format = "csv";
  unsigned threads = 1;
  std::filesystem::path data_path;  // `fit` scenario input
};

struct ScenarioOutcome {
  Report summary;
  std::vector<std::string> artifacts;
  bool converged = true;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"spectrum", "fig2", "fig3", "fig4", "fig5", "fit"};
  return names;
}

namespace detail {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  template <typename Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ostringstream os;
    fn(os);
    std::ofstream file(dir_ / name, std::ios::binary | std::ios::trunc);
    file << os.str();
    if (!file) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

inline void add_fit_summary(Report& s, const std::string& prefix, const FitResult& fit) {
  for (const auto& p : fit.parameters) {
    s.add(prefix + p.name, p.value);
    s.add(prefix + p.name + "_sigma", p.sigma);
  }
  s.add(prefix + "converged", fit.converged);
  if (fit.ill_conditioned) s.add(prefix + "ill_conditioned", true);
  if (fit.degenerate) s.add(prefix + "degenerate", true);
}

inline void write_run(ArtifactWriter& w, const FringeRun& run, const ScanConfig& scan) {
  w.write(run.name + ".csv", [&](std::ostream& os) { write_dataset(os, run.data); });
  w.write(run.name + "_fit.txt", [&](std::ostream& os) { write_fit_report(os, run.fit, run.name); });
  w.write(run.name + "_model.csv", [&](std::ostream& os) { write_curve_csv(os, model_curve(run.fitted, scan)); });
}

inline const char* central_extremum(const FringeModel& m) {
  return hom_multi(m, m.tau0) < 0.5 ? "dip" : "peak";
}

}  // namespace detail

/// Runs one scenario and writes its artifacts, a summary and a manifest into
/// `opt.out_dir`. Outputs depend only on (config, scenario options, seed).
inline ScenarioOutcome run_scenario(const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), opt.scenario) == names.end())
    throw ConfigError("unknown scenario '" + opt.scenario + "'");
  if (opt.format != "csv") throw ConfigError("unsupported output format '" + opt.format + "'");
  cfg.validate();

  ScenarioOutcome out;
  Report& s = out.summary;
  detail::ArtifactWriter w(opt.out_dir);
  s.add("scenario", opt.scenario);
  auto note_fit = [&](const FitResult& fit) { out.converged = out.converged && fit.converged; };

  if (opt.scenario == "spectrum") {
    const SpectrumResult r = run_spectrum(cfg, opt.seed, opt.threads);
    w.write("transmission_wide.csv", [&](std::ostream& os) { write_transmission_csv(os, r.wide); });
    w.write("transmission_zoom.csv", [&](std::ostream& os) { write_transmission_csv(os, r.zoom); });
    w.write("singles_scan.csv", [&](std::ostream& os) { write_scan_csv(os, r.scan); });
    w.write("wss_program.csv", [&](std::ostream& os) {
      os << "center_ghz,width_ghz,port\n";
      for (const auto& b : r.program.passbands())
        os << format_double(b.center.ghz()) << ',' << format_double(b.width.ghz()) << ',' << b.output_port << '\n';
    });
    w.write("routing.csv", [&](std::ostream& os) {
      os << "index,center_thz,port\n";
      for (const auto& [port, lines] : r.routing)
        for (const auto& l : lines) os << l.index << ',' << format_double(l.center.thz()) << ',' << port << '\n';
    });
    s.add("q_factor", r.q_factor);
    s.add("fsr_ghz", cfg.resonator.fsr_ghz);
    s.add("fwhm_mhz", cfg.resonator.fwhm_mhz);
    s.add("scan_points", r.scan.size());
    std::size_t routed = 0;
    for (const auto& [port, lines] : r.routing) routed += lines.size();
    s.add("passbands", r.program.passbands().size());
    s.add("routed_lines", routed);
  } else if (opt.scenario == "fig2") {
    const Fig2Result r = run_fig2(cfg, opt.seed, opt.threads);
    w.write("coarse.csv", [&](std::ostream& os) { write_dataset(os, r.coarse); });
    w.write("coarse_fit.txt", [&](std::ostream& os) { write_fit_report(os, r.envelope.fit, "envelope"); });
    w.write("coarse_model.csv", [&](std::ostream& os) {
      std::vector<CurvePoint> curve;
      const auto& pr = r.envelope.fit.parameters;
      for (std::size_t j = 0; j < r.coarse_scan.point_count(); ++j) {
        const double tau = r.coarse_scan.tau_at(j);
        curve.push_back({tau * 1e12, pr[0].value + pr[1].value * envelope_value(r.envelope_used, tau - r.envelope.tau0)});
      }
      write_curve_csv(os, curve, "counts");
    });
    s.add("envelope_fwhm_mhz", r.envelope.fwhm_hz * 1e-6);
    s.add("envelope_fwhm_sigma_mhz", r.envelope.fwhm_error_hz * 1e-6);
    s.add("envelope_ill_conditioned", r.envelope.ill_conditioned);
    for (std::size_t i = 0; i < r.fine.size(); ++i) {
      const FringeRun& run = r.fine[i];
      detail::write_run(w, run, r.fine_scans[i]);
      detail::add_fit_summary(s, run.name + ".", run.fit);
      const double e = envelope_value(r.envelope_used, r.centers_s[i] - cfg.source.tau0_ps * 1e-12);
      s.add(run.name + ".apparent_visibility", run.fit.value("V") * e);
      s.add(run.name + ".apparent_visibility_sigma", run.fit.sigma("V") * e);
      note_fit(run.fit);
    }
    note_fit(r.envelope.fit);
  } else if (opt.scenario == "fig3") {
    const Fig3Result r = run_fig3(cfg, opt.pairs, opt.seed, opt.threads);
    detail::write_run(w, r.run, r.scan);
    s.add("pairs", format_pair_list(opt.pairs));
    detail::add_fit_summary(s, "", r.run.fit);
    if (r.single) {
      s.add("period_ps", r.period * 1e12);
      s.add("period_sigma_ps", r.period_sigma * 1e12);
      s.add("expected_period_ps", oscillation_period(pair_detunings(cfg, opt.pairs).front()) * 1e12);
    } else {
      s.add("revival_ps", r.revival * 1e12);
      s.add("expected_revival_ps", revival_period(cfg.resonator.model().fsr().hz_f()) * 1e12);
      s.add("dip_fwhm_ps", r.dip_fwhm * 1e12);
      s.add("accidental_fraction", accidental_fraction(cfg, opt.pairs.size()));
    }
    note_fit(r.run.fit);
  } else if (opt.scenario == "fig4") {
    if (!opt.phase_deg) throw ConfigError("fig4 requires --phase {0,90,180,270}");
    const Fig4Result r = run_fig4(cfg, *opt.phase_deg, opt.seed, opt.threads);
    s.add("phase_deg", *opt.phase_deg);
    s.add("hwp_angle_deg", rad_to_deg(r.hwp_angle));
    s.add("gate_phase_rad", r.gate_phase);
    for (const FringeRun* run : {&r.single, &r.multi}) {
      detail::write_run(w, *run, r.scan);
      detail::add_fit_summary(s, run->name + ".", run->fit);
      s.add(run->name + ".central_extremum", detail::central_extremum(run->fitted));
      note_fit(run->fit);
    }
  } else if (opt.scenario == "fig5") {
    const Fig5Result r = run_fig5(cfg, opt.seed);
    w.write("density_matrix.txt", [&](std::ostream& os) { write_density_matrix(os, r.reconstruction.rho); });
    s.add("n_si", r.counts.n_si);
    s.add("n_is", r.counts.n_is);
    s.add("balance", r.balance.value);
    s.add("balance_sigma", r.balance.sigma);
    s.add("visibility", cfg.fig5.visibility);
    s.add("phase_rad", cfg.fig5.phase_rad);
    s.add("fidelity", r.reconstruction.fidelity);
    s.add("fidelity_sigma", r.reconstruction.fidelity_sigma);
    s.add("fidelity_mc_mean", r.reconstruction.mean_fidelity);
    s.add("mc_accepted", r.reconstruction.accepted);
    s.add("mc_rejection_rate", r.reconstruction.rejection_rate());
  } else {  // fit
    if (opt.data_path.empty()) throw ConfigError("fit requires --data <dataset.csv>");
    std::ifstream in(opt.data_path);
    if (!in) throw ConfigError("cannot open dataset '" + opt.data_path.string() + "'");
    FringeDataset data = read_dataset(in);
    FringeFitOptions fo;
    fo.envelope = resonator_envelope(cfg);
    fo.detunings_hz = pair_detunings(cfg, opt.pairs);
    fo.alpha = accidental_fraction(cfg, opt.pairs.size());
    fo.lm = lm_options(cfg);
    if (opt.pairs.size() == 1) {
      fo.fixed_tau0 = cfg.source.tau0_ps * 1e-12;
      fo.fit_detuning = true;
    } else {
      fo.tau0_start = cfg.source.tau0_ps * 1e-12;
    }
    const FitResult fit = fit_fringe(data, fo);
    FringeRun run;
    run.name = "fit";
    run.data = data;
    run.fit = fit;
    run.fitted = fitted_model(cfg, opt.pairs, fit, fo);
    ScanConfig grid;
    const auto pts = detail::sorted_points(data);
    grid.tau_start = pts.front().tau;
    grid.tau_stop = pts.back().tau;
    grid.tau_step = (grid.tau_stop - grid.tau_start) / static_cast<double>(pts.size() - 1);
    w.write("fit.txt", [&](std::ostream& os) { write_fit_report(os, fit, "fit"); });
    w.write("fit_model.csv", [&](std::ostream& os) { write_curve_csv(os, model_curve(run.fitted, grid)); });
    s.add("data", opt.data_path.filename().string());
    s.add("pairs", format_pair_list(opt.pairs));
    detail::add_fit_summary(s, "", fit);
    note_fit(fit);
  }

  s.add("all_fits_converged", out.converged);
  w.write("summary.txt", [&](std::ostream& os) { os << s.str(); });
  w.write("manifest.txt", [&](std::ostream& os) {
    os << "tool = " << kToolName << '\n';
    os << "version = " << kVersion << '\n';
    os << "scenario = " << opt.scenario << '\n';
    if (opt.scenario == "fig3" || opt.scenario == "fit") os << "pairs = " << format_pair_list(opt.pairs) << '\n';
    if (opt.phase_deg) os << "phase_deg = " << *opt.phase_deg << '\n';
    os << "seed = " << opt.seed << '\n';
    os << "format = " << opt.format << '\n';
    os << "rng = philox4x32-10\n";
    os << "artifacts =";
    for (const auto& n : w.names()) os << ' ' << n;
    os << " manifest.txt\n\n# effective configuration\n";
    write_config(os, cfg);
  });
  out.artifacts = w.names();
  return out;
}

}  // namespace qfc
