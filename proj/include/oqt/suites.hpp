// Randomized verification batteries.
//
// Each suite draws reproducible pseudo-random cases from a seed, pushes them
// through the spectral pipeline, and accumulates the worst deviation per
// check. A suite passes when every check stays within its tolerance.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace oqt {

struct SuiteCheck {
  std::string label;
  double worst = 0.0;
  double tolerance = 0.0;
  int first_failure = -1;  // trial index, -1 when within tolerance
  bool pass = true;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<SuiteCheck> checks;
  bool pass = true;
  std::string repro_command;
};

// Available suites:
//   ehrenfest          rate decomposition vs finite differences along
//                      dephasing, thermal, driven closed, and amplitude
//                      damping trajectories, 3 random observables each
//   gauge              heat and power rates under random eigenvector
//                      re-gauging, including an exactly degenerate case
//   robertson          commutator expectation vs 2*sigma*sigma bound on
//                      random states and operator pairs, dims 2..4
//   oracle_equivalence dense-pipeline qubit rates vs vector closed forms
std::vector<std::string> suite_names();

SuiteReport run_suite(const std::string& name, std::uint64_t seed, int trials);

// Writes <out_dir>/suite_<name>.json and returns the path.
std::filesystem::path write_suite_report(const SuiteReport& report,
                                         const std::filesystem::path& out_dir);

}  // namespace oqt
