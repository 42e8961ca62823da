// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qfc/comb.hpp"
#include "qfc/counting.hpp"
#include "qfc/error.hpp"
#include "qfc/format.hpp"
#include "qfc/units.hpp"
#include "qfc/wss.hpp"

namespace qfc {

//---------------------------------------------------------------------------//
// Pair lists: "5", "2-5", "2,4,7-9"
//---------------------------------------------------------------------------//

inline std::vector<int> parse_pair_list(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  auto to_int = [&](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
            s.end());
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size() || v < 1)
      throw ConfigError("pair list '" + text + "': '" + s + "' is not a pair index >= 1");
    return v;
  };
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.insert(to_int(item));
      continue;
    }
    const int a = to_int(item.substr(0, dash));
    const int b = to_int(item.substr(dash + 1));
    if (b < a) throw ConfigError("pair list '" + text + "': descending range");
    for (int m = a; m <= b; ++m) out.insert(m);
  }
  if (out.empty()) throw ConfigError("pair list is empty");
  return {out.begin(), out.end()};
}

/// Canonical form: consecutive runs collapsed, e.g. {2,3,4,5,9} -> "2-5,9".
inline std::string format_pair_list(const std::vector<int>& pairs) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j + 1 < pairs.size() && pairs[j + 1] == pairs[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(pairs[i]);
    if (j > i) out += '-' + std::to_string(pairs[j]);
    i = j + 1;
  }
  return out;
}

//---------------------------------------------------------------------------//
// Scenario configuration
//---------------------------------------------------------------------------//

struct ResonatorConfig {
  double pump_thz = 193.5;
  double fsr_ghz = 99.03;
  double fwhm_mhz = 190.41;
  double extinction = 0.9;

  ResonatorModel model() const {
    return {Frequency::from_thz(pump_thz), Frequency::from_ghz(fsr_ghz),
            Frequency::from_mhz(fwhm_mhz), extinction};
  }
};

struct DetectorConfig {
  double efficiency_signal = 0.1;
  double efficiency_idler = 0.1;
  double dark_rate_hz = 100.0;
  double coincidence_window_ns = 1.0;

  DetectorModel model() const {
    return {efficiency_signal, efficiency_idler, dark_rate_hz, coincidence_window_ns * 1e-9};
  }
};

/// Pair source as seen by the interferometer.
struct SourceConfig {
  double pair_rate_hz = 2000.0;  // per frequency pair, before detection losses
  double visibility = 0.85;
  double phase_deg = 0.0;
  double tau0_ps = 0.0;
};

struct WssConfig {
  double channel_width_ghz = 20.0;
  std::vector<int> pairs{2, 3, 4, 5};
  /// Explicit program; when empty the program selects `pairs`.
  std::vector<Passband> passbands;
};

struct SpectrumConfig {
  double wide_start_thz = 192.0;
  double wide_stop_thz = 195.0;
  double wide_step_mhz = 50.0;
  double zoom_span_ghz = 2.0;
  double zoom_step_mhz = 5.0;
  double scan_start_thz = 191.9;
  double scan_stop_thz = 195.1;
  double scan_step_ghz = 33.01;
  double line_flux_hz = 5e4;
  double scan_dark_rate_hz = 100.0;
  double scan_dwell_s = 1.0;
};

struct Fig2Config {
  int pair = 2;
  double coarse_start_ns = 0.0;
  double coarse_stop_ns = 2.4;
  double coarse_step_ps = 2.0;
  double coarse_dwell_s = 10.0;
  int coarse_averaging = 16;
  std::vector<double> fine_centers_ns{0.0, 2.0};
  double fine_half_width_ps = 3.0;
  double fine_step_ps = 0.1;
  double fine_dwell_s = 50.0;
};

struct Fig3Config {
  double single_half_width_ps = 3.0;
  double single_step_ps = 0.02;
  double single_dwell_s = 60.0;
  double multi_start_ps = -6.0;
  double multi_stop_ps = 6.0;
  double multi_step_ps = 0.02;
  double multi_dwell_s = 30.0;
};

struct Fig4Config {
  int pair = 2;
  std::vector<int> multi_pairs{2, 3, 4, 5};
  double half_width_ps = 3.0;
  double step_ps = 0.05;
  double dwell_s = 30.0;
};

struct Fig5Config {
  double balance = 0.701;
  double basis_rate_hz = 281.37;
  double basis_dwell_s = 30.0;
  double visibility = 0.7713;
  double visibility_sigma = 0.0193;
  double phase_rad = -0.1168;
  double phase_sigma_rad = 0.1094;
  double target_phase_deg = 0.0;
  int samples = 20000;
};

struct FitConfig {
  double relative_tolerance = 1e-9;
  int max_iterations = 200;
};

struct ScenarioConfig {
  ResonatorConfig resonator;
  DetectorConfig detector;
  SourceConfig source;
  WssConfig wss;
  SpectrumConfig spectrum;
  Fig2Config fig2;
  Fig3Config fig3;
  Fig4Config fig4;
  Fig5Config fig5;
  FitConfig fit;

  void validate() const;
};

namespace detail {

struct ConfigField {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline double to_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  if (!parse_double(text, v)) throw ConfigError(field + ": '" + text + "' is not a number");
  return v;
}

inline int to_int(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  int v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError(field + ": '" + text + "' is not an integer");
  return v;
}

inline std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

/// "center_ghz, width_ghz, port"
inline Passband parse_passband(const std::string& field, const std::string& text) {
  const auto parts = split_commas(text);
  if (parts.size() != 3)
    throw ConfigError(field + ": expected 'center_ghz, width_ghz, port', got '" + text + "'");
  const double center = to_double(field, parts[0]);
  const double width = to_double(field, parts[1]);
  const int port = to_int(field, parts[2]);
  if (!(width > 0.0)) throw ConfigError(field + ": width must be positive");
  if (port < 1) throw ConfigError(field + ": port must be >= 1");
  return {Frequency::from_ghz(center), Frequency::from_ghz(width), port};
}

inline std::string format_passband(const Passband& p) {
  return format_double(p.center.ghz()) + ", " + format_double(p.width.ghz()) + ", " +
         std::to_string(p.output_port);
}

inline std::vector<ConfigField> config_fields(ScenarioConfig& c) {
  std::vector<ConfigField> f;
  auto num = [&](const char* section, const char* key, double& ref) {
    const std::string name = std::string("[") + section + "] " + key;
    f.push_back({section, key, [&ref, name](const std::string& v) { ref = to_double(name, v); },
                 [&ref] { return format_double(ref); }});
  };
  auto integer = [&](const char* section, const char* key, int& ref) {
    const std::string name = std::string("[") + section + "] " + key;
    f.push_back({section, key, [&ref, name](const std::string& v) { ref = to_int(name, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto pairs = [&](const char* section, const char* key, std::vector<int>& ref) {
    const std::string name = std::string("[") + section + "] " + key;
    f.push_back({section, key,
                 [&ref, name](const std::string& v) {
                   try {
                     ref = parse_pair_list(v);
                   } catch (const ConfigError& e) {
                     throw ConfigError(name + ": " + e.what());
                   }
                 },
                 [&ref] { return format_pair_list(ref); }});
  };
  auto numbers = [&](const char* section, const char* key, std::vector<double>& ref) {
    const std::string name = std::string("[") + section + "] " + key;
    f.push_back({section, key,
                 [&ref, name](const std::string& v) {
                   ref.clear();
                   for (const auto& part : split_commas(v)) ref.push_back(to_double(name, part));
                 },
                 [&ref] {
                   std::string s;
                   for (double x : ref) s += (s.empty() ? "" : ", ") + format_double(x);
                   return s;
                 }});
  };

  num("resonator", "pump_thz", c.resonator.pump_thz);
  num("resonator", "fsr_ghz", c.resonator.fsr_ghz);
  num("resonator", "fwhm_mhz", c.resonator.fwhm_mhz);
  num("resonator", "extinction", c.resonator.extinction);

  num("detector", "efficiency_signal", c.detector.efficiency_signal);
  num("detector", "efficiency_idler", c.detector.efficiency_idler);
  num("detector", "dark_rate_hz", c.detector.dark_rate_hz);
  num("detector", "coincidence_window_ns", c.detector.coincidence_window_ns);

  num("source", "pair_rate_hz", c.source.pair_rate_hz);
  num("source", "visibility", c.source.visibility);
  num("source", "phase_deg", c.source.phase_deg);
  num("source", "tau0_ps", c.source.tau0_ps);

  num("wss", "channel_width_ghz", c.wss.channel_width_ghz);
  pairs("wss", "pairs", c.wss.pairs);

  num("spectrum", "wide_start_thz", c.spectrum.wide_start_thz);
  num("spectrum", "wide_stop_thz", c.spectrum.wide_stop_thz);
  num("spectrum", "wide_step_mhz", c.spectrum.wide_step_mhz);
  num("spectrum", "zoom_span_ghz", c.spectrum.zoom_span_ghz);
  num("spectrum", "zoom_step_mhz", c.spectrum.zoom_step_mhz);
  num("spectrum", "scan_start_thz", c.spectrum.scan_start_thz);
  num("spectrum", "scan_stop_thz", c.spectrum.scan_stop_thz);
  num("spectrum", "scan_step_ghz", c.spectrum.scan_step_ghz);
  num("spectrum", "line_flux_hz", c.spectrum.line_flux_hz);
  num("spectrum", "scan_dark_rate_hz", c.spectrum.scan_dark_rate_hz);
  num("spectrum", "scan_dwell_s", c.spectrum.scan_dwell_s);

  integer("fig2", "pair", c.fig2.pair);
  num("fig2", "coarse_start_ns", c.fig2.coarse_start_ns);
  num("fig2", "coarse_stop_ns", c.fig2.coarse_stop_ns);
  num("fig2", "coarse_step_ps", c.fig2.coarse_step_ps);
  num("fig2", "coarse_dwell_s", c.fig2.coarse_dwell_s);
  integer("fig2", "coarse_averaging", c.fig2.coarse_averaging);
  numbers("fig2", "fine_centers_ns", c.fig2.fine_centers_ns);
  num("fig2", "fine_half_width_ps", c.fig2.fine_half_width_ps);
  num("fig2", "fine_step_ps", c.fig2.fine_step_ps);
  num("fig2", "fine_dwell_s", c.fig2.fine_dwell_s);

  num("fig3", "single_half_width_ps", c.fig3.single_half_width_ps);
  num("fig3", "single_step_ps", c.fig3.single_step_ps);
  num("fig3", "single_dwell_s", c.fig3.single_dwell_s);
  num("fig3", "multi_start_ps", c.fig3.multi_start_ps);
  num("fig3", "multi_stop_ps", c.fig3.multi_stop_ps);
  num("fig3", "multi_step_ps", c.fig3.multi_step_ps);
  num("fig3", "multi_dwell_s", c.fig3.multi_dwell_s);

  integer("fig4", "pair", c.fig4.pair);
  pairs("fig4", "multi_pairs", c.fig4.multi_pairs);
  num("fig4", "half_width_ps", c.fig4.half_width_ps);
  num("fig4", "step_ps", c.fig4.step_ps);
  num("fig4", "dwell_s", c.fig4.dwell_s);

  num("fig5", "balance", c.fig5.balance);
  num("fig5", "basis_rate_hz", c.fig5.basis_rate_hz);
  num("fig5", "basis_dwell_s", c.fig5.basis_dwell_s);
  num("fig5", "visibility", c.fig5.visibility);
  num("fig5", "visibility_sigma", c.fig5.visibility_sigma);
  num("fig5", "phase_rad", c.fig5.phase_rad);
  num("fig5", "phase_sigma_rad", c.fig5.phase_sigma_rad);
  num("fig5", "target_phase_deg", c.fig5.target_phase_deg);
  integer("fig5", "samples", c.fig5.samples);

  num("fit", "relative_tolerance", c.fit.relative_tolerance);
  integer("fit", "max_iterations", c.fit.max_iterations);
  return f;
}

inline bool is_passband_key(const std::string& key) {
  return key.size() > 8 && key.rfind("passband", 0) == 0 &&
         std::all_of(key.begin() + 8, key.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace detail

inline void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field + ": " + what);
  };
  auto positive = [&](double v, const std::string& field) { require(v > 0.0, field, "must be positive"); };
  auto non_negative = [&](double v, const std::string& field) {
    require(v >= 0.0, field, "must be non-negative");
  };
  auto unit = [&](double v, const std::string& field) {
    require(v >= 0.0 && v <= 1.0, field, "must lie in [0, 1]");
  };

  positive(resonator.pump_thz, "[resonator] pump_thz");
  positive(resonator.fsr_ghz, "[resonator] fsr_ghz");
  positive(resonator.fwhm_mhz, "[resonator] fwhm_mhz");
  unit(resonator.extinction, "[resonator] extinction");
  require(resonator.fwhm_mhz * 1e-3 < resonator.fsr_ghz, "[resonator] fwhm_mhz",
          "must be smaller than the fsr");

  require(detector.efficiency_signal > 0.0 && detector.efficiency_signal <= 1.0,
          "[detector] efficiency_signal", "must lie in (0, 1]");
  require(detector.efficiency_idler > 0.0 && detector.efficiency_idler <= 1.0,
          "[detector] efficiency_idler", "must lie in (0, 1]");
  non_negative(detector.dark_rate_hz, "[detector] dark_rate_hz");
  positive(detector.coincidence_window_ns, "[detector] coincidence_window_ns");

  non_negative(source.pair_rate_hz, "[source] pair_rate_hz");
  unit(source.visibility, "[source] visibility");

  positive(wss.channel_width_ghz, "[wss] channel_width_ghz");
  require(wss.channel_width_ghz < resonator.fsr_ghz, "[wss] channel_width_ghz",
          "must be smaller than the fsr");

  require(spectrum.wide_stop_thz > spectrum.wide_start_thz, "[spectrum] wide_stop_thz",
          "must exceed wide_start_thz");
  positive(spectrum.wide_step_mhz, "[spectrum] wide_step_mhz");
  positive(spectrum.zoom_span_ghz, "[spectrum] zoom_span_ghz");
  positive(spectrum.zoom_step_mhz, "[spectrum] zoom_step_mhz");
  require(spectrum.scan_stop_thz > spectrum.scan_start_thz, "[spectrum] scan_stop_thz",
          "must exceed scan_start_thz");
  positive(spectrum.scan_step_ghz, "[spectrum] scan_step_ghz");
  non_negative(spectrum.line_flux_hz, "[spectrum] line_flux_hz");
  non_negative(spectrum.scan_dark_rate_hz, "[spectrum] scan_dark_rate_hz");
  positive(spectrum.scan_dwell_s, "[spectrum] scan_dwell_s");

  require(fig2.pair >= 1, "[fig2] pair", "must be >= 1");
  require(fig2.coarse_stop_ns > fig2.coarse_start_ns, "[fig2] coarse_stop_ns",
          "must exceed coarse_start_ns");
  positive(fig2.coarse_step_ps, "[fig2] coarse_step_ps");
  positive(fig2.coarse_dwell_s, "[fig2] coarse_dwell_s");
  require(fig2.coarse_averaging >= 1, "[fig2] coarse_averaging", "must be >= 1");
  positive(fig2.fine_half_width_ps, "[fig2] fine_half_width_ps");
  positive(fig2.fine_step_ps, "[fig2] fine_step_ps");
  positive(fig2.fine_dwell_s, "[fig2] fine_dwell_s");

  positive(fig3.single_half_width_ps, "[fig3] single_half_width_ps");
  positive(fig3.single_step_ps, "[fig3] single_step_ps");
  positive(fig3.single_dwell_s, "[fig3] single_dwell_s");
  require(fig3.multi_stop_ps > fig3.multi_start_ps, "[fig3] multi_stop_ps",
          "must exceed multi_start_ps");
  positive(fig3.multi_step_ps, "[fig3] multi_step_ps");
  positive(fig3.multi_dwell_s, "[fig3] multi_dwell_s");

  require(fig4.pair >= 1, "[fig4] pair", "must be >= 1");
  positive(fig4.half_width_ps, "[fig4] half_width_ps");
  positive(fig4.step_ps, "[fig4] step_ps");
  positive(fig4.dwell_s, "[fig4] dwell_s");

  unit(fig5.balance, "[fig5] balance");
  non_negative(fig5.basis_rate_hz, "[fig5] basis_rate_hz");
  positive(fig5.basis_dwell_s, "[fig5] basis_dwell_s");
  unit(fig5.visibility, "[fig5] visibility");
  non_negative(fig5.visibility_sigma, "[fig5] visibility_sigma");
  non_negative(fig5.phase_sigma_rad, "[fig5] phase_sigma_rad");
  require(fig5.samples >= 0, "[fig5] samples", "must be >= 0");

  positive(fit.relative_tolerance, "[fit] relative_tolerance");
  require(fit.max_iterations >= 1, "[fit] max_iterations", "must be >= 1");
}

/// Reads an INI-style config: [section] headers, "key = value" lines and
/// full-line comments starting with '#' or ';'. Keys not given keep their
/// defaults; unknown sections and keys are errors.
inline ScenarioConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  ScenarioConfig cfg;
  auto fields = detail::config_fields(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' appears outside any section");
    const bool known_section = std::any_of(fields.begin(), fields.end(),
                                           [&](const auto& f) { return f.section == section; });
    if (!known_section) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string value = detail::trim(node.data());
      if (section == "wss" && detail::is_passband_key(key)) {
        cfg.wss.passbands.push_back(detail::parse_passband("[wss] " + key, value));
        continue;
      }
      auto it = std::find_if(fields.begin(), fields.end(),
                             [&](const auto& f) { return f.section == section && f.key == key; });
      if (it == fields.end()) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      it->set(value);
    }
  }
  cfg.validate();
  if (!cfg.wss.passbands.empty()) static_cast<void>(FilterProgram(cfg.wss.passbands));
  return cfg;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

/// Canonical listing of every setting, in schema order; parses back to the same config.
inline void write_config(std::ostream& os, const ScenarioConfig& config) {
  ScenarioConfig copy = config;
  const auto fields = detail::config_fields(copy);
  std::string current;
  for (const auto& f : fields) {
    if (f.section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get() << '\n';
    if (f.section == "wss" && f.key == "pairs") {
      for (std::size_t i = 0; i < copy.wss.passbands.size(); ++i)
        os << "passband" << i + 1 << " = " << detail::format_passband(copy.wss.passbands[i]) << '\n';
    }
  }
}

}  // namespace qfc
