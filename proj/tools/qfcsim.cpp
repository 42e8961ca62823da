// SPDX-License-Identifier: Apache-2.0
// qfcsim: scenario runner for the frequency-bin entanglement simulator.
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qfc/config.hpp"
#include "qfc/error.hpp"
#include "qfc/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitFit = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulates and fits frequency-bin entangled two-photon interference.\n"
               "Scenarios: spectrum, fig2, fig3, fig4, fig5, fit"};
  app.set_version_flag("--version", std::string(qfc::kToolName) + " " + qfc::kVersion);

  qfc::RunOptions opt;
  std::string config_path;
  std::string pairs_text;
  int phase = 0;
  std::string data_path;

  app.add_option("scenario", opt.scenario, "Scenario to run")
      ->required()
      ->check(CLI::IsMember(qfc::scenario_names()));
  app.add_option("--config", config_path, "Scenario configuration file (INI)")->required();
  app.add_option("--seed", opt.seed, "Random seed")->required();
  app.add_option("--out", opt.out_dir, "Output directory")->required();
  app.add_option("--pairs", pairs_text, "Pair indices for fig3/fit, e.g. 5 or 2-10 (default 5)");
  auto* phase_opt = app.add_option("--phase", phase, "Phase setting in degrees for fig4")
                        ->check(CLI::IsMember({0, 90, 180, 270}));
  app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv"}));
  app.add_option("--threads", opt.threads, "Worker threads (does not change outputs)")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--data", data_path, "Dataset CSV to fit (fit scenario)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!pairs_text.empty()) opt.pairs = qfc::parse_pair_list(pairs_text);
    if (*phase_opt) opt.phase_deg = phase;
    opt.data_path = data_path;

    std::ifstream in(config_path);
    if (!in) throw qfc::ConfigError("cannot open config file '" + config_path + "'");
    const qfc::ScenarioConfig cfg = qfc::parse_config(in);

    const qfc::ScenarioOutcome outcome = qfc::run_scenario(cfg, opt);
    std::cout << outcome.summary.str();
    if (!outcome.converged) {
      std::cerr << "error: a fit did not converge; results were written but are not reliable\n";
      return kExitFit;
    }
    return kExitOk;
  } catch (const qfc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qfc::FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kExitFit;
  } catch (const qfc::NonPhysicalStateError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qfc::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qfc::ModelError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
