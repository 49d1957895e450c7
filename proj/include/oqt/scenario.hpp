#pragma once

// Scenario layer: a full run description (dynamics + initial state + grid +
// observables + tolerances), compiled-in presets, and the runner that
// integrates, audits, decomposes and writes the time series / summary files.

#include "oqt/dynamics.hpp"
#include "oqt/thermo.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oqt {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ToleranceSet {
  double integrator = 1e-9;
  double deg = 1e-8;
  double leak = 1e-7;
  double audit = 1e-7;
  double decomposition = 1e-6;
  double lambda_floor = 1e-14;
  double fd_step = 1e-4;
};

struct ScenarioConfig {
  std::string name;
  DynamicsSpec spec;
  DensityMatrix initial_state;
  double t0 = 0.0;
  double t1 = 1.0;
  int sample_count = 1001;
  std::vector<std::pair<std::string, HermitianOperator>> observables;
  ToleranceSet tolerances;
  std::uint64_t seed = 0;
  std::string oracle_preset;             // "" for config-file runs
  std::map<std::string, double> params;  // effective numeric parameters
  std::string canonical_text;            // hashed into every output
};

struct OracleRow {
  std::string label;
  double value = 0.0;
  double expected = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ObservableSeries {
  std::string name;
  std::vector<EhrenfestDecomposition> samples;  // fd_reference at fd_step
  std::vector<double> fd_half;                  // finite difference at fd_step/2
  double worst_residual = 0.0;  // max |total - fd| over both step sizes
};

struct ScenarioAnalysis {
  Trajectory trajectory;
  std::vector<SpectralFrame> frames;
  std::vector<ThermoRecord> records;
  std::vector<ObservableSeries> observables;
  double delta_E = 0.0;
  double Q_accum = 0.0;
  double W_accum = 0.0;
  double delta_S = 0.0;
  double max_first_law_residual = 0.0;
  double max_decomposition_residual = 0.0;
  int flagged_samples = 0;
  std::vector<OracleRow> oracles;
  bool pass = false;
};

ScenarioAnalysis analyze(const ScenarioConfig& config);

struct ScenarioOutcome {
  ScenarioAnalysis analysis;
  std::filesystem::path timeseries_path;
  std::filesystem::path summary_path;
  bool pass = false;
};

// analyze() plus CSV time series and JSON summary in out_dir (created if
// absent).  Outputs are byte-identical across repeated runs of the same
// config.
ScenarioOutcome run_scenario(const ScenarioConfig& config,
                             const std::filesystem::path& out_dir);

std::vector<std::string> preset_names();

// Compiled-in scenarios.  overrides replaces named numeric parameters
// ("samples" is accepted and truncated to int); unknown keys are errors.
//   dephasing:          pure dephasing from a pure state, heat/work oracle
//   closed_rabi:        driven closed qubit, zero-heat oracle
//   thermal_relaxation: relaxation from the excited state, W = 0 oracle
//   depolarizing:       isotropic contraction, audit only
ScenarioConfig make_preset(const std::string& name,
                           const std::map<std::string, double>& overrides = {});

// Structured config file (JSON).  Matrices are row-major lists of [re, im]
// pairs.  Parse and semantic errors raise ConfigError with location info.
ScenarioConfig parse_scenario_file(const std::filesystem::path& path);

// CLI-level tolerance/grid overrides, recorded into the canonical text.
void apply_overrides(ScenarioConfig& config, std::optional<int> samples,
                     std::optional<double> tol_integrator,
                     std::optional<double> tol_audit);

std::uint64_t fnv1a(std::string_view bytes);
std::string config_hash_hex(const ScenarioConfig& config);

}  // namespace oqt
