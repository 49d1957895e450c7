#include "oqt/suites.hpp"

#include "oqt/bloch.hpp"
#include "oqt/dynamics.hpp"
#include "oqt/random.hpp"
#include "oqt/thermo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace oqt {

namespace {

struct CheckAccumulator {
  std::string label;
  double tolerance = 0.0;
  double worst = 0.0;
  int first_failure = -1;

  void update(double value, int trial) {
    worst = std::max(worst, value);
    if (value > tolerance && first_failure < 0) first_failure = trial;
  }

  SuiteCheck finish() const {
    return SuiteCheck{label, worst, tolerance, first_failure,
                      worst <= tolerance};
  }
};

Trajectory sampled_trajectory(const DynamicsSpec& spec, const DensityMatrix& rho0,
                              double t0, double t1, int samples) {
  IntegratorControl control;
  control.sample_count = samples;
  return integrate(spec, rho0, {t0, t1}, control);
}

DynamicsSpec driven_closed_spec() {
  const double amp = 0.4, omega = 1.5;
  const ComplexMatrix hz = -1.0 * pauli_z();
  const ComplexMatrix hx = pauli_x();
  Hamiltonian h(
      [hz, hx, amp, omega](double t) {
        return HermitianOperator(ComplexMatrix(hz + amp * std::cos(omega * t) * hx));
      },
      [hx, amp, omega](double t) {
        return HermitianOperator(ComplexMatrix(-amp * omega * std::sin(omega * t) * hx));
      });
  return DynamicsSpec(std::move(h));
}

struct EhrenfestCase {
  DynamicsSpec spec;
  DensityMatrix rho0;
};

EhrenfestCase ehrenfest_case(int which) {
  switch (which % 4) {
    case 0:
      return {builtin_channel(ChannelKind::pure_dephasing,
                              {{"eps", 1.0}, {"Gamma", 0.5}}),
              from_bloch(Vec3(std::sqrt(0.75), 0.0, 0.5))};
    case 1:
      return {builtin_channel(ChannelKind::thermal_qubit,
                              {{"eps", 1.0}, {"gamma", 0.8}, {"nbar", 0.3}}),
              from_bloch(Vec3(0.5, 0.3, 0.2))};
    case 2:
      return {driven_closed_spec(), from_bloch(Vec3(0.6, 0.0, 0.3))};
    default:
      return {builtin_channel(ChannelKind::amplitude_damping,
                              {{"eps", 1.0}, {"gamma", 0.6}}),
              from_bloch(Vec3(0.6, 0.0, -0.5))};
  }
}

SuiteReport ehrenfest_suite(std::uint64_t seed, int trials) {
  CheckAccumulator residual{"max_abs_total_minus_fd", 1e-6};

  for (int trial = 0; trial < trials; ++trial) {
    EhrenfestCase c = ehrenfest_case(trial);
    const Trajectory traj = sampled_trajectory(c.spec, c.rho0, 0.0, 3.0, 301);
    const auto frames = track_spectrum(traj, c.spec);

    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    std::vector<HermitianOperator> observables;
    for (int k = 0; k < 3; ++k) observables.push_back(random_hermitian(2, rng));
    const HermitianOperator obs_rate = HermitianOperator::zero(2);

    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const double t = traj.times[i];
      const ComplexMatrix rho_dot =
          c.spec.apply_generator(t, traj.states[i].matrix());
      const OmegaGenerator omega = reconstruct_omega(frames[i], rho_dot);
      for (const HermitianOperator& obs : observables) {
        const EhrenfestDecomposition d =
            ehrenfest_rate(frames[i], omega, traj.states[i], obs, obs_rate);
        const double fd =
            observable_rate_fd(c.spec, traj.states[i], t, obs, 1e-4);
        const double fd_half =
            observable_rate_fd(c.spec, traj.states[i], t, obs, 5e-5);
        residual.update(std::abs(d.total - fd), trial);
        residual.update(std::abs(d.total - fd_half), trial);
      }
    }
  }

  SuiteReport report{"ehrenfest", seed, trials, {residual.finish()}, true, ""};
  return report;
}

ComplexMatrix block_gauge(const std::vector<std::vector<int>>& blocks,
                          Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  ComplexMatrix g = ComplexMatrix::Zero(n, n);
  for (const auto& block : blocks) {
    const auto m = static_cast<Eigen::Index>(block.size());
    if (m == 1) {
      g(block[0], block[0]) = std::exp(Complex(0.0, angle(rng)));
    } else {
      const ComplexMatrix u = random_unitary(m, rng);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
          g(block[static_cast<std::size_t>(a)],
            block[static_cast<std::size_t>(b)]) = u(a, b);
        }
      }
    }
  }
  return g;
}

SuiteReport gauge_suite(std::uint64_t seed, int trials) {
  CheckAccumulator dq{"max_abs_delta_Q_dot", 1e-10};
  CheckAccumulator dw{"max_abs_delta_W_dot", 1e-10};
  CheckAccumulator domega{"max_abs_delta_omega_matrix", 1e-10};

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    const Eigen::Index n = 3;

    HermitianOperator h = random_hermitian(n, rng);
    std::vector<Dissipator> ds;
    DensityMatrix rho = [&] {
      if (trial % 2 == 0) {
        ds.push_back({ginibre(n, rng) * 0.5, 0.3});
        return random_density(n, rng);
      }
      // exactly degenerate spectrum, closed dynamics (the only case where
      // block mixing is a genuine gauge freedom of the trajectory)
      const ComplexMatrix v = random_unitary(n, rng);
      Eigen::Vector3d lam(0.4, 0.4, 0.2);
      return DensityMatrix(
          ComplexMatrix(v * lam.cast<Complex>().asDiagonal() * v.adjoint()));
    }();
    const DynamicsSpec spec(Hamiltonian(h), std::move(ds));

    const Trajectory traj{{0.0}, {rho}, spec, 0.0, 0, 0};
    const SpectralFrame frame = track_spectrum(traj, spec)[0];
    const ComplexMatrix rho_dot = spec.apply_generator(0.0, rho.matrix());
    const HermitianOperator h_rate = HermitianOperator::zero(n);

    const OmegaGenerator omega0 = reconstruct_omega(frame, rho_dot);
    const double q0 = heat_rate(frame, h);
    const double w0 = expectation(rho, power_operator(omega0, h, h_rate));

    SpectralFrame regauged = frame;
    const ComplexMatrix g = block_gauge(frame.degeneracy_blocks, n, rng);
    regauged.eigenvectors = frame.eigenvectors * g;
    regauged.lambda_dot = (regauged.eigenvectors.adjoint() * rho_dot *
                           regauged.eigenvectors)
                              .diagonal()
                              .real();

    const OmegaGenerator omega1 = reconstruct_omega(regauged, rho_dot);
    const double q1 = heat_rate(regauged, h);
    const double w1 = expectation(rho, power_operator(omega1, h, h_rate));

    dq.update(std::abs(q1 - q0), trial);
    dw.update(std::abs(w1 - w0), trial);
    domega.update(max_abs(ComplexMatrix(omega1.matrix.matrix() -
                                        omega0.matrix.matrix())),
                  trial);
  }

  SuiteReport report{"gauge",
                     seed,
                     trials,
                     {dq.finish(), dw.finish(), domega.finish()},
                     true,
                     ""};
  return report;
}

SuiteReport robertson_suite(std::uint64_t seed, int trials) {
  CheckAccumulator violation{"max_bound_violation", 1e-12};
  CheckAccumulator box{"max_qubit_box_violation", 1e-12};
  CheckAccumulator saturation{"saturation_case_gap", 1e-12};

  {
    // B, o, w pairwise orthogonal saturates the bound: both sides equal
    // 2|w||o||B| = 2.
    const DensityMatrix rho = from_bloch(Vec3(1.0, 0.0, 0.0));
    const OmegaGenerator omega{from_field_vector(Vec3(0.0, 0.0, 1.0))};
    const HermitianOperator obs = from_field_vector(Vec3(0.0, 1.0, 0.0));
    const RobertsonCheck rc = robertson_check(rho, omega, obs);
    saturation.update(std::abs(rc.lhs - 2.0), 0);
    saturation.update(std::abs(rc.rhs - 2.0), 0);
  }

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    const Eigen::Index n = 2 + (trial % 3);
    const DensityMatrix rho = random_density(n, rng);
    const OmegaGenerator omega{random_hermitian(n, rng)};
    const HermitianOperator obs = random_hermitian(n, rng);
    const RobertsonCheck rc = robertson_check(rho, omega, obs);
    violation.update(std::max(0.0, rc.lhs - rc.rhs), trial);

    const Vec3 b = random_in_ball(rng);
    const Vec3 o = 2.0 * random_in_ball(rng);
    const Vec3 w = 2.0 * random_in_ball(rng);
    const double lhs = std::abs(coherence_rate_triple(b, o, w));
    const double rhs = 2.0 * b.norm() * o.norm() * w.norm();
    box.update(std::max(0.0, lhs - rhs), trial);
  }

  SuiteReport report{"robertson",
                     seed,
                     trials,
                     {violation.finish(), box.finish(), saturation.finish()},
                     true,
                     ""};
  return report;
}

SuiteReport oracle_equivalence_suite(std::uint64_t seed, int trials) {
  CheckAccumulator coherence{"max_abs_coherence_vs_triple", 1e-12};
  CheckAccumulator power{"max_abs_power_vs_closed_form", 1e-12};
  CheckAccumulator heat{"max_abs_heat_rate_vs_qubit_form", 1e-8};

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    Vec3 b = random_in_ball(rng, 0.95);
    while (b.norm() < 0.05) b = random_in_ball(rng, 0.95);
    const Vec3 o = 2.0 * random_in_ball(rng);
    const Vec3 w = 2.0 * random_in_ball(rng);
    const Vec3 v = 2.0 * random_in_ball(rng);

    const DensityMatrix rho = from_bloch(b);
    const HermitianOperator obs = from_field_vector(o);
    const OmegaGenerator omega{from_field_vector(w)};
    const HermitianOperator h = from_field_vector(v);
    const HermitianOperator zero2 = HermitianOperator::zero(2);

    const Complex c =
        trace_product(rho.matrix(), commutator(omega.matrix.matrix(), obs.matrix()));
    const double coherence_dense = -c.imag();
    coherence.update(std::abs(coherence_dense - coherence_rate_triple(b, o, w)),
                     trial);

    const double w_dense = expectation(rho, power_operator(omega, h, zero2));
    coherence.update(std::abs(w_dense - coherence_rate_triple(b, v, w)), trial);
    power.update(std::abs(w_dense - qubit_power(b, v, Vec3(-2.0 * w))), trial);
  }

  struct HeatCase {
    DynamicsSpec spec;
    DensityMatrix rho0;
  };
  const HeatCase cases[] = {
      {builtin_channel(ChannelKind::thermal_qubit,
                       {{"eps", 1.0}, {"gamma", 0.8}, {"nbar", 0.3}}),
       from_bloch(Vec3(0.5, 0.3, 0.2))},
      {builtin_channel(ChannelKind::pure_dephasing,
                       {{"eps", 1.0}, {"Gamma", 0.5}}),
       from_bloch(Vec3(std::sqrt(0.75), 0.0, 0.5))},
      {builtin_channel(ChannelKind::amplitude_damping,
                       {{"eps", 1.0}, {"gamma", 0.6}}),
       from_bloch(Vec3(0.6, 0.0, -0.5))},
  };
  for (const HeatCase& hc : cases) {
    const Trajectory traj = sampled_trajectory(hc.spec, hc.rho0, 0.0, 3.0, 201);
    const auto frames = track_spectrum(traj, hc.spec);
    const HermitianOperator h = hc.spec.hamiltonian().value(0.0);
    const Vec3 v = to_field_vector(h);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const ComplexMatrix rho_dot =
          hc.spec.apply_generator(traj.times[i], traj.states[i].matrix());
      const Vec3 b = to_bloch(traj.states[i]).B;
      const Vec3 b_dot(trace_product(rho_dot, pauli_x()).real(),
                       trace_product(rho_dot, pauli_y()).real(),
                       trace_product(rho_dot, pauli_z()).real());
      const double dense = heat_rate(frames[i], h);
      const double qubit = qubit_heat_rate(b, b_dot, v);
      heat.update(std::abs(dense - qubit), 0);
    }
  }

  SuiteReport report{"oracle_equivalence",
                     seed,
                     trials,
                     {coherence.finish(), power.finish(), heat.finish()},
                     true,
                     ""};
  return report;
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"ehrenfest", "gauge", "robertson", "oracle_equivalence"};
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed, int trials) {
  if (trials < 1) throw ValidationError("suite trials must be >= 1");
  SuiteReport report = [&] {
    if (name == "ehrenfest") return ehrenfest_suite(seed, trials);
    if (name == "gauge") return gauge_suite(seed, trials);
    if (name == "robertson") return robertson_suite(seed, trials);
    if (name == "oracle_equivalence") return oracle_equivalence_suite(seed, trials);
    throw ValidationError("unknown suite '" + name + "' (available: ehrenfest, "
                          "gauge, robertson, oracle_equivalence)");
  }();
  report.pass = true;
  for (const SuiteCheck& c : report.checks) report.pass = report.pass && c.pass;
  report.repro_command = "oqt suite " + report.suite + " --seed " +
                         std::to_string(report.seed) + " --trials " +
                         std::to_string(report.trials);
  return report;
}

std::filesystem::path write_suite_report(const SuiteReport& report,
                                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path path = out_dir / ("suite_" + report.suite + ".json");

  nlohmann::ordered_json j;
  j["suite"] = report.suite;
  j["seed"] = report.seed;
  j["trials"] = report.trials;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const SuiteCheck& c : report.checks) {
    checks.push_back({{"label", c.label},
                      {"worst", c.worst},
                      {"tolerance", c.tolerance},
                      {"first_failure_trial", c.first_failure},
                      {"pass", c.pass}});
  }
  j["checks"] = checks;
  j["pass"] = report.pass;
  j["repro_command"] = report.repro_command;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write suite report '" + path.string() + "'");
  out << j.dump(2) << "\n";
  return path;
}

}  // namespace oqt
