// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qfc/counting.hpp"
#include "qfc/io.hpp"

namespace qfc {
namespace {

FringeDataset sample_dataset(std::uint64_t seed) {
  ScanConfig scan;
  scan.tau_start = -3e-12;
  scan.tau_stop = 3e-12;
  scan.tau_step = 0.02e-12;
  scan.dwell = 60.0;
  return simulate_fringe(comb_fringe_model({5}, 99.03e9, 0.8, 0.2, Envelope::from_fwhm_hz(190.41e6)),
                         scan, DetectorModel{}, 5e4, seed);
}

std::string to_text(const FringeDataset& d) {
  std::ostringstream os;
  write_dataset(os, d);
  return os.str();
}

FringeDataset from_text(const std::string& s) {
  std::istringstream is(s);
  return read_dataset(is);
}

TEST(Dataset, RoundTripPreservesContent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FringeDataset d = sample_dataset(seed);
    const std::string text = to_text(d);
    const FringeDataset back = from_text(text);
    ASSERT_EQ(back.points.size(), d.points.size());
    EXPECT_EQ(back.dwell, d.dwell);
    EXPECT_EQ(back.metadata, d.metadata);
    for (std::size_t i = 0; i < d.points.size(); ++i) {
      EXPECT_EQ(back.points[i].counts, d.points[i].counts);
      EXPECT_NEAR(back.points[i].tau, d.points[i].tau, 1e-21);
    }
    EXPECT_EQ(to_text(back), text);
  }
}

TEST(Dataset, HeaderLayout) {
  const std::string text = to_text(sample_dataset(1));
  EXPECT_EQ(text.rfind("# dwell_s=60\n# seed=1\n", 0), 0u);
  EXPECT_NE(text.find("\ndelay_ps,counts\n-3,"), std::string::npos);
}

TEST(Dataset, AcceptsExternalFilesWithCommentsAndCrlf) {
  const FringeDataset d = from_text(
      "# exported by a time tagger\r\n# dwell_s=30\r\n#source = lab\r\n\r\ndelay_ps,counts\r\n"
      "-1.5,10\r\n0,3\r\n1.5,12\r\n");
  EXPECT_EQ(d.dwell, 30.0);
  ASSERT_EQ(d.points.size(), 3u);
  EXPECT_EQ(d.points[1].counts, 3);
  ASSERT_EQ(d.metadata.size(), 1u);
  EXPECT_EQ(d.metadata[0].first, "source ");
}

void expect_error(const std::string& text, const std::string& fragment) {
  try {
    from_text(text);
    ADD_FAILURE() << "no error for: " << text;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(Dataset, DiagnosticsNameTheLine) {
  expect_error("# dwell_s=1\ndelay,counts\n", "line 2");
  expect_error("# dwell_s=1\ndelay_ps,counts\n0,5\n1;6\n", "line 4");
  expect_error("# dwell_s=1\ndelay_ps,counts\n0,-5\n", "non-negative integer");
  expect_error("# dwell_s=1\ndelay_ps,counts\n0,2.5\n", "non-negative integer");
  expect_error("# dwell_s=1\ndelay_ps,counts\nx,2\n", "delay is not a number");
  expect_error("# dwell_s=fast\ndelay_ps,counts\n", "line 1");
  expect_error("delay_ps,counts\n0,1\n", "dwell_s");
  expect_error("# dwell_s=1\n", "header");
  expect_error("# dwell_s=1\ndelay_ps,counts\n1,1\n0,1\n", "strictly increasing");
}

TEST(DensityMatrixFile, FixedLayout) {
  std::ostringstream os;
  write_density_matrix(os, restricted_density(0.701, 0.7713, -0.1168));
  const std::string expected =
      "# real\n"
      "0.000000 0.000000 0.000000 0.000000\n"
      "0.000000 0.701000 0.383022 0.000000\n"
      "0.000000 0.383022 0.299000 0.000000\n"
      "0.000000 0.000000 0.000000 0.000000\n"
      "# imag\n"
      "0.000000 0.000000 0.000000 0.000000\n"
      "0.000000 0.000000 0.044942 0.000000\n"
      "0.000000 -0.044942 0.000000 0.000000\n"
      "0.000000 0.000000 0.000000 0.000000\n";
  EXPECT_EQ(os.str(), expected);
}

TEST(CurveFiles, SnappedDelaysAndShortestRoundTripValues) {
  std::ostringstream os;
  write_curve_csv(os, {{-0.1, 0.5}, {0.0, 0.1}, {1.0 / 3.0, 0.25}, {-5.9959999999999996, 1.0 / 3.0}});
  EXPECT_EQ(os.str(), "delay_ps,probability\n-0.1,0.5\n0,0.1\n0.333333333,0.25\n-5.996,0.3333333333333333\n");
  std::ostringstream cs;
  write_curve_csv(cs, {{2.0, 120.5}}, "counts");
  EXPECT_EQ(cs.str(), "delay_ps,counts\n2,120.5\n");
  std::ostringstream ts;
  write_transmission_csv(ts, {{193.5, 0.1}, {193.59903, 0.999999999999}});
  EXPECT_EQ(ts.str(), "frequency_thz,transmittance\n193.5,0.1\n193.59903,1\n");
}

TEST(FitReport, ListsParametersAndCovariance) {
  FitResult fit;
  fit.parameters = {{"N", 1000.0, 10.0}, {"V", 0.8, 0.02}};
  fit.covariance = Eigen::Matrix2d{{100.0, 0.0}, {0.0, 0.0004}};
  fit.points = 61;
  fit.converged = true;
  std::ostringstream os;
  write_fit_report(os, fit, "fit");
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("[fit]\nN = 1000 ± 10\nV = 0.8 ± 0.02\n", 0), 0u);
  EXPECT_NE(s.find("covariance = N V\n  100 0\n  0 4e-04\n"), std::string::npos);
  EXPECT_NE(s.find("converged = true"), std::string::npos);
}

}  // namespace
}  // namespace qfc
