// Command line front end.
//
//   oqt run <config.json> [--out-dir DIR] [--samples N]
//                         [--tol-integrator X] [--tol-audit X]
//   oqt preset <name> [--param k=v ...] [--out-dir DIR] [--samples N]
//                     [--tol-integrator X] [--tol-audit X]
//   oqt suite <name> [--seed S] [--trials N] [--out-dir DIR]
//   oqt list
//
// Exit codes: 0 run passed, 1 an audit or closed-form check failed,
// 2 configuration or usage error.

#include "oqt/scenario.hpp"
#include "oqt/suites.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

std::map<std::string, double> parse_param_list(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const std::string& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw oqt::ConfigError("--param expects key=value, got '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    std::size_t used = 0;
    double parsed = 0.0;
    try {
      parsed = std::stod(value, &used);
    } catch (const std::exception&) {
      throw oqt::ConfigError("--param " + key + ": '" + value + "' is not a number");
    }
    if (used != value.size()) {
      throw oqt::ConfigError("--param " + key + ": '" + value + "' is not a number");
    }
    out[key] = parsed;
  }
  return out;
}

void print_oracles(const oqt::ScenarioAnalysis& a) {
  for (const oqt::OracleRow& r : a.oracles) {
    std::printf("  check %-28s value % .12e expected % .12e error %.3e tol %.3e %s\n",
                r.label.c_str(), r.value, r.expected, r.error, r.tolerance,
                r.pass ? "ok" : "FAIL");
  }
}

int report_scenario(const oqt::ScenarioOutcome& outcome) {
  const oqt::ScenarioAnalysis& a = outcome.analysis;
  std::printf("samples %zu  accepted %ld  rejected %ld  max_projection %.3e\n",
              a.records.size(), a.trajectory.accepted_steps,
              a.trajectory.rejected_steps, a.trajectory.max_projection);
  std::printf("delta_E % .12e  Q % .12e  W % .12e  delta_S % .12e\n", a.delta_E,
              a.Q_accum, a.W_accum, a.delta_S);
  std::printf("max_first_law_residual %.3e  max_decomposition_residual %.3e  "
              "flagged %d\n",
              a.max_first_law_residual, a.max_decomposition_residual,
              a.flagged_samples);
  print_oracles(a);
  std::printf("wrote %s\n", outcome.timeseries_path.string().c_str());
  std::printf("wrote %s\n", outcome.summary_path.string().c_str());
  std::printf("%s\n", a.pass ? "PASS" : "FAIL");
  return a.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open quantum system dynamics and energy-flow audit"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::string config_path;
  std::string preset_name;
  std::string suite_name;
  std::vector<std::string> params;
  std::optional<int> samples;
  std::optional<double> tol_integrator;
  std::optional<double> tol_audit;
  std::uint64_t seed = 20260815;
  int trials = 0;

  CLI::App* run = app.add_subcommand("run", "run a JSON scenario config");
  run->add_option("config", config_path, "scenario config file")->required();
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--samples", samples, "override sample count");
  run->add_option("--tol-integrator", tol_integrator, "override step tolerance");
  run->add_option("--tol-audit", tol_audit, "override first-law audit tolerance");

  CLI::App* preset = app.add_subcommand("preset", "run a compiled-in scenario");
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--param", params, "override a preset parameter, key=value");
  preset->add_option("--out-dir", out_dir, "output directory");
  preset->add_option("--samples", samples, "override sample count");
  preset->add_option("--tol-integrator", tol_integrator, "override step tolerance");
  preset->add_option("--tol-audit", tol_audit, "override first-law audit tolerance");

  CLI::App* suite = app.add_subcommand("suite", "run a randomized verification suite");
  suite->add_option("name", suite_name, "suite name")->required();
  suite->add_option("--seed", seed, "base seed");
  suite->add_option("--trials", trials, "trial count (0 = suite default)");
  suite->add_option("--out-dir", out_dir, "output directory");

  CLI::App* list = app.add_subcommand("list", "list presets and suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) {
      std::printf("presets:\n");
      for (const std::string& n : oqt::preset_names()) {
        std::printf("  %s\n", n.c_str());
      }
      std::printf("suites:\n");
      for (const std::string& n : oqt::suite_names()) {
        std::printf("  %s\n", n.c_str());
      }
      return 0;
    }

    if (run->parsed() || preset->parsed()) {
      oqt::ScenarioConfig config =
          run->parsed() ? oqt::parse_scenario_file(config_path)
                        : oqt::make_preset(preset_name, parse_param_list(params));
      oqt::apply_overrides(config, samples, tol_integrator, tol_audit);
      std::printf("scenario %s  config_hash %s\n", config.name.c_str(),
                  oqt::config_hash_hex(config).c_str());
      return report_scenario(oqt::run_scenario(config, out_dir));
    }

    if (trials == 0) {
      trials = (suite_name == "robertson" || suite_name == "oracle_equivalence")
                   ? 1000
                   : 100;
    }
    const oqt::SuiteReport report = oqt::run_suite(suite_name, seed, trials);
    std::printf("suite %s  seed %llu  trials %d\n", report.suite.c_str(),
                static_cast<unsigned long long>(report.seed), report.trials);
    for (const oqt::SuiteCheck& c : report.checks) {
      std::printf("  check %-32s worst %.6e tol %.3e %s\n", c.label.c_str(),
                  c.worst, c.tolerance, c.pass ? "ok" : "FAIL");
    }
    const auto path = oqt::write_suite_report(report, out_dir);
    std::printf("wrote %s\n", path.string().c_str());
    std::printf("repro: %s\n", report.repro_command.c_str());
    std::printf("%s\n", report.pass ? "PASS" : "FAIL");
    return report.pass ? 0 : 1;
  } catch (const oqt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const oqt::ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const oqt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
