// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfc/counting.hpp"
#include "qfc/error.hpp"
#include "qfc/fit.hpp"
#include "qfc/format.hpp"
#include "qfc/states.hpp"
#include "qfc/wss.hpp"

namespace qfc {

//---------------------------------------------------------------------------//
// Fringe datasets: "# key=value" metadata lines, then "delay_ps,counts".
//---------------------------------------------------------------------------//

/// Delays are written in ps, snapped to 1e-9 ps so grid values print cleanly.
inline std::string format_delay_ps(double tau_s) {
  const double ps = std::round(tau_s * 1e21) / 1e9;
  return format_double(ps == 0.0 ? 0.0 : ps);
}

inline void write_dataset(std::ostream& os, const FringeDataset& data) {
  os << "# dwell_s=" << format_double(data.dwell) << '\n';
  for (const auto& [key, value] : data.metadata)
    if (key != "dwell_s") os << "# " << key << '=' << value << '\n';
  os << "delay_ps,counts\n";
  for (const auto& p : data.points) os << format_delay_ps(p.tau) << ',' << p.counts << '\n';
}

/// Parses the dataset format above. Errors carry the 1-based line number.
inline FringeDataset read_dataset(std::istream& is) {
  FringeDataset data;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  bool dwell_seen = false;
  auto fail = [&](const std::string& what) {
    throw ConfigError("dataset line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = line.substr(line.find_first_not_of("# \t") == std::string::npos
                                        ? line.size()
                                        : line.find_first_not_of("# \t"));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // free-form comment
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      if (key == "dwell_s") {
        if (!parse_double(value, data.dwell)) fail("dwell_s is not a number");
        dwell_seen = true;
      } else {
        data.metadata.emplace_back(key, value);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "delay_ps,counts") fail("expected header 'delay_ps,counts'");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail("expected 'delay_ps,counts'");
    double tau_ps = 0.0, counts = 0.0;
    if (!parse_double(std::string_view(line).substr(0, comma), tau_ps))
      fail("delay is not a number");
    if (!parse_double(std::string_view(line).substr(comma + 1), counts) || counts < 0.0 ||
        counts != std::floor(counts))
      fail("counts must be a non-negative integer");
    data.points.push_back({tau_ps * 1e-12, static_cast<std::int64_t>(counts)});
  }
  if (!header_seen) throw ConfigError("dataset: missing 'delay_ps,counts' header");
  if (!dwell_seen) throw ConfigError("dataset: missing '# dwell_s=' metadata line");
  try {
    data.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  return data;
}

//---------------------------------------------------------------------------//
// Other CSV artifacts
//---------------------------------------------------------------------------//

struct CurvePoint {
  double x;
  double y;
};

/// frequency_thz,transmittance with 9 significant digits.
inline void write_transmission_csv(std::ostream& os, const std::vector<CurvePoint>& sweep) {
  os << "frequency_thz,transmittance\n";
  for (const auto& p : sweep)
    os << format_significant(p.x, 9) << ',' << format_significant(p.y, 9) << '\n';
}

inline void write_scan_csv(std::ostream& os, const std::vector<SinglesScanPoint>& scan) {
  os << "center_thz,counts\n";
  for (const auto& p : scan) os << format_double(p.center.thz()) << ',' << p.counts << '\n';
}

/// delay_ps,<value_name>, with x in ps.
inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve,
                            const std::string& value_name = "probability") {
  os << "delay_ps," << value_name << '\n';
  for (const auto& p : curve) os << format_delay_ps(p.x * 1e-12) << ',' << format_double(p.y) << '\n';
}

/// Real block then imaginary block, row-major, 6 decimals.
inline void write_density_matrix(std::ostream& os, const RestrictedDensityMatrix& rho) {
  const Eigen::Matrix4cd m = rho.matrix();
  auto block = [&](const char* title, auto part) {
    os << title << '\n';
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double v = part(m(r, c));
        if (v == 0.0) v = 0.0;  // no "-0.000000"
        std::string s = format_fixed(v, 6);
        if (s == "-0.000000") s = "0.000000";
        os << (c ? " " : "") << s;
      }
      os << '\n';
    }
  };
  block("# real", [](Complex z) { return z.real(); });
  block("# imag", [](Complex z) { return z.imag(); });
}

/// "name = value ± sigma" lines, then the covariance block.
inline void write_fit_report(std::ostream& os, const FitResult& fit, const std::string& title) {
  os << "[" << title << "]\n";
  for (const auto& p : fit.parameters)
    os << p.name << " = " << format_double(p.value) << " ± " << format_double(p.sigma) << '\n';
  os << "rss = " << format_double(fit.rss) << '\n';
  os << "points = " << fit.points << '\n';
  os << "converged = " << (fit.converged ? "true" : "false") << '\n';
  os << "iterations = " << fit.iterations << '\n';
  os << "starts = " << fit.starts << '\n';
  os << "ill_conditioned = " << (fit.ill_conditioned ? "true" : "false") << '\n';
  os << "degenerate = " << (fit.degenerate ? "true" : "false") << '\n';
  for (const auto& w : fit.warnings) os << "warning = " << w << '\n';
  os << "covariance =";
  for (const auto& p : fit.parameters) os << ' ' << p.name;
  os << '\n';
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c)
      os << (c ? " " : "  ") << format_double(fit.covariance(r, c));
    os << '\n';
  }
}

}  // namespace qfc
