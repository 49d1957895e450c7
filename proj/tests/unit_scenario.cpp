#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oqt/scenario.hpp"
#include "oqt/suites.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"

using namespace oqt;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "oqt_scenario_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& stem, const std::string& text) {
  const fs::path path = test_dir() / (stem + ".json");
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// parse must fail with a ConfigError whose message mentions `needle`
void expect_config_error(const std::string& stem, const std::string& text,
                         const std::string& needle) {
  const fs::path path = write_config(stem, text);
  try {
    parse_scenario_file(path);
    FAIL("expected ConfigError for ", stem);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    INFO("message: ", what);
    CHECK(what.find(needle) != std::string::npos);
  }
}

const OracleRow& oracle_row(const ScenarioAnalysis& a, const std::string& label) {
  for (const OracleRow& r : a.oracles) {
    if (r.label == label) return r;
  }
  FAIL("no oracle row labelled ", label);
  static OracleRow dummy;
  return dummy;
}

}  // namespace

TEST_CASE("preset catalogue and parameter handling") {
  const auto names = preset_names();
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "dephasing");

  const ScenarioConfig base = make_preset("dephasing");
  CHECK(base.sample_count == 4001);
  CHECK(base.t1 == doctest::Approx(std::log(1e6) / 0.5).epsilon(1e-12));
  CHECK(base.oracle_preset == "dephasing");
  CHECK(base.observables.size() == 2);
  CHECK(base.spec.dim() == 2);
  CHECK_FALSE(base.spec.closed());
  CHECK(base.canonical_text.rfind("preset:dephasing", 0) == 0);

  const ScenarioConfig tweaked =
      make_preset("dephasing", {{"t1", 8.0}, {"samples", 801.0}});
  CHECK(tweaked.t1 == 8.0);
  CHECK(tweaked.sample_count == 801);

  CHECK(make_preset("closed_rabi").spec.closed());

  CHECK_THROWS_AS(make_preset("nope"), ConfigError);
  CHECK_THROWS_AS(make_preset("dephasing", {{"bogus", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_preset("dephasing", {{"samples", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_preset("dephasing", {{"samples", 100.5}}), ConfigError);
  CHECK_THROWS_AS(make_preset("thermal_relaxation", {{"pe0", 1.5}}), ConfigError);
}

TEST_CASE("config hash is stable and override-sensitive") {
  ScenarioConfig c1 = make_preset("closed_rabi");
  ScenarioConfig c2 = make_preset("closed_rabi");
  CHECK(config_hash_hex(c1).size() == 16);
  CHECK(config_hash_hex(c1) == config_hash_hex(c2));

  apply_overrides(c2, 301, std::nullopt, std::nullopt);
  CHECK(c2.sample_count == 301);
  CHECK(config_hash_hex(c1) != config_hash_hex(c2));

  CHECK_THROWS_AS(apply_overrides(c1, 1, std::nullopt, std::nullopt), ConfigError);
  CHECK_THROWS_AS(apply_overrides(c1, std::nullopt, -1e-9, std::nullopt),
                  ConfigError);
  CHECK_THROWS_AS(apply_overrides(c1, std::nullopt, std::nullopt, 0.0),
                  ConfigError);

  CHECK(fnv1a("") == 14695981039346656037ULL);  // spot check against published value
}

TEST_CASE("dephasing preset reproduces its closed-form heat") {
  const ScenarioAnalysis a = analyze(make_preset("dephasing"));

  CHECK(a.pass);
  CHECK(a.flagged_samples == 0);
  CHECK(a.max_first_law_residual < 1e-7);
  CHECK(a.max_decomposition_residual <= 1e-6);

  const OracleRow& q = oracle_row(a, "Q_accum_vs_closed_form");
  CHECK(q.pass);
  CHECK(q.expected ==
        doctest::Approx(oracles::dephasing_heat_bz_half).epsilon(1e-14));
  CHECK(oracle_row(a, "W_plus_Q").pass);
  CHECK(oracle_row(a, "delta_E").pass);

  // final spectrum is (3/4, 1/4): entropy gain matches the closed form
  CHECK(a.delta_S == doctest::Approx(oracles::entropy_075_025).epsilon(1e-6));
}

TEST_CASE("scenario outputs are deterministic and complete") {
  const ScenarioConfig cfg = make_preset("closed_rabi", {{"samples", 601.0}});
  const ScenarioOutcome out1 = run_scenario(cfg, test_dir() / "run_a");
  const ScenarioOutcome out2 = run_scenario(cfg, test_dir() / "run_b");

  CHECK(out1.pass);
  const std::string csv1 = slurp(out1.timeseries_path);
  CHECK(csv1 == slurp(out2.timeseries_path));
  CHECK(slurp(out1.summary_path) == slurp(out2.summary_path));

  CHECK(csv1.rfind("# time_series: closed_rabi", 0) == 0);
  CHECK(csv1.find(",B_norm,") != std::string::npos);
  CHECK(csv1.find("sx_thermal") != std::string::npos);
  std::size_t data_lines = 0;
  std::istringstream lines(csv1);
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line[0] != '#') ++data_lines;
  }
  CHECK(data_lines == 602);  // header + one row per sample

  const auto summary = nlohmann::json::parse(slurp(out1.summary_path));
  CHECK(summary.at("name") == "closed_rabi");
  CHECK(summary.at("pass") == true);
  CHECK(summary.at("config_hash") == config_hash_hex(cfg));
  CHECK(summary.at("sample_count") == 601);
  CHECK(summary.at("results").at("flagged_samples") == 0);
  CHECK(std::abs(summary.at("closed_form_checks").at(0).at("value").get<double>()) <
        1e-9);
}

TEST_CASE("config file: built-in channel form") {
  const fs::path path = write_config("demo-channel", R"({
  "name": "demo-channel",
  "dynamics": {"channel": "pure_dephasing", "params": {"eps": 1.0, "Gamma": 0.5}},
  "initial_state": {"bloch": [0.6, 0.0, 0.5]},
  "t_span": [0.0, 2.0],
  "sample_count": 101,
  "observables": {"sx": [[0,0],[1,0],[1,0],[0,0]]},
  "tolerances": {"integrator": 1e-9},
  "seed": 7
})");
  const ScenarioConfig cfg = parse_scenario_file(path);
  CHECK(cfg.name == "demo-channel");
  CHECK(cfg.sample_count == 101);
  CHECK(cfg.seed == 7);
  CHECK(cfg.observables.size() == 1);
  CHECK(cfg.spec.dim() == 2);
  CHECK(cfg.t1 == 2.0);
  CHECK(cfg.oracle_preset.empty());

  const ScenarioAnalysis a = analyze(cfg);
  CHECK(a.pass);
  CHECK(a.flagged_samples == 0);
  CHECK(a.oracles.empty());  // open system, no preset: audit only
}

TEST_CASE("config file: explicit operators, three levels") {
  const fs::path path = write_config("qutrit_decay", R"({
  "dynamics": {
    "hamiltonian": [[0.9,0],[0.1,0],[0,0],
                    [0.1,0],[0.3,0],[0.1,0],
                    [0,0],[0.1,0],[-0.2,0]],
    "dissipators": [
      {"operator": [[0,0],[1,0],[0,0],
                    [0,0],[0,0],[0,0],
                    [0,0],[0,0],[0,0]], "rate": 0.3},
      {"operator": [[0,0],[0,0],[0,0],
                    [0,0],[0,0],[1,0],
                    [0,0],[0,0],[0,0]], "rate": 0.2}
    ]
  },
  "initial_state": {"matrix": [[0.55,0],[0,0],[0,0],
                               [0,0],[0.3,0],[0,0],
                               [0,0],[0,0],[0.15,0]]},
  "t_span": [0.0, 0.5],
  "sample_count": 51,
  "observables": {"level_imbalance": [[1,0],[0,0],[0,0],
                                      [0,0],[0,0],[0,0],
                                      [0,0],[0,0],[-1,0]]}
})");
  const ScenarioConfig cfg = parse_scenario_file(path);
  CHECK(cfg.name == "qutrit_decay");  // defaults to the file stem
  CHECK(cfg.spec.dim() == 3);
  CHECK(cfg.spec.dissipators().size() == 2);

  const ScenarioAnalysis a = analyze(cfg);
  CHECK(a.pass);
  CHECK(a.flagged_samples == 0);
  CHECK(a.max_first_law_residual < 1e-7);
  CHECK(a.max_decomposition_residual <= 1e-6);
}

TEST_CASE("config file errors carry their location") {
  expect_config_error("broken_syntax", "{ \"name\": \"x\",\n  oops\n}", "line 2");
  expect_config_error("no_dynamics",
                      R"({"initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]})",
                      "dynamics");
  expect_config_error("bad_matrix_count", R"({
    "dynamics": {"hamiltonian": [[1,0],[0,0],[0,0]]},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]
  })",
                      "square");
  expect_config_error("not_hermitian", R"({
    "dynamics": {"hamiltonian": [[0,0],[1,0],[0,0],[0,0]]},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]
  })",
                      "dynamics");
  expect_config_error("bad_trace", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"matrix": [[0.7,0],[0,0],[0,0],[0.7,0]]},
    "t_span": [0,1]
  })",
                      "initial_state");
  expect_config_error("bloch_too_long", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [1.2, 0, 0]}, "t_span": [0,1]
  })",
                      "initial_state");
  expect_config_error("state_dim_mismatch", R"({
    "dynamics": {"hamiltonian": [[1,0],[0,0],[0,0],
                                 [0,0],[0,0],[0,0],
                                 [0,0],[0,0],[-1,0]]},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]
  })",
                      "dimension");
  expect_config_error("unknown_key", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1], "extra": 1
  })",
                      "unknown key");
  expect_config_error("unknown_tolerance", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1],
    "tolerances": {"bogus": 1e-9}
  })",
                      "tolerance");
  expect_config_error("reversed_span", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [1,0]
  })",
                      "t_span");
  expect_config_error("bad_sample_count", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1], "sample_count": 1
  })",
                      "sample_count");
  expect_config_error("bad_observable_name", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1],
    "observables": {"bad name": [[1,0],[0,0],[0,0],[-1,0]]}
  })",
                      "identifier");
  expect_config_error("observable_dim_mismatch", R"({
    "dynamics": {"channel": "closed", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1],
    "observables": {"big": [[1,0],[0,0],[0,0],
                            [0,0],[0,0],[0,0],
                            [0,0],[0,0],[-1,0]]}
  })",
                      "dimension");
  expect_config_error("dissipator_missing_rate", R"({
    "dynamics": {"hamiltonian": [[1,0],[0,0],[0,0],[-1,0]],
                 "dissipators": [{"operator": [[0,0],[1,0],[0,0],[0,0]]}]},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]
  })",
                      "rate");
  expect_config_error("negative_rate", R"({
    "dynamics": {"hamiltonian": [[1,0],[0,0],[0,0],[-1,0]],
                 "dissipators": [{"operator": [[0,0],[1,0],[0,0],[0,0]],
                                  "rate": -0.5}]},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]
  })",
                      "dynamics");
  expect_config_error("channel_missing_param", R"({
    "dynamics": {"channel": "pure_dephasing", "params": {"eps": 1.0}},
    "initial_state": {"bloch": [0,0,1]}, "t_span": [0,1]
  })",
                      "dynamics");
}

TEST_CASE("suite registry") {
  const auto names = suite_names();
  REQUIRE(names.size() == 4);
  CHECK_THROWS_AS(run_suite("nope", 1, 10), ValidationError);
  CHECK_THROWS_AS(run_suite("robertson", 1, 0), ValidationError);

  const SuiteReport robertson = run_suite("robertson", 1, 60);
  CHECK(robertson.pass);
  CHECK(robertson.trials == 60);
  CHECK(robertson.repro_command == "oqt suite robertson --seed 1 --trials 60");
  REQUIRE_FALSE(robertson.checks.empty());
  for (const SuiteCheck& c : robertson.checks) {
    CHECK(c.pass);
    CHECK(c.worst <= c.tolerance);
    CHECK(c.first_failure == -1);
  }

  CHECK(run_suite("ehrenfest", 2, 2).pass);
  CHECK(run_suite("gauge", 3, 6).pass);
  CHECK(run_suite("oracle_equivalence", 4, 40).pass);

  const fs::path report_path =
      write_suite_report(robertson, test_dir() / "suite_out");
  const auto j = nlohmann::json::parse(slurp(report_path));
  CHECK(j.at("suite") == "robertson");
  CHECK(j.at("pass") == true);
  CHECK(j.at("checks").size() == robertson.checks.size());
}
