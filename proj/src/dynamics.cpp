#include "oqt/dynamics.hpp"

#include "oqt/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace oqt {

Hamiltonian::Hamiltonian(HermitianOperator constant) {
  dim_ = constant.dim();
  time_dependent_ = false;
  const HermitianOperator zero = HermitianOperator::zero(dim_);
  value_ = [op = std::move(constant)](double) { return op; };
  derivative_ = [zero](double) { return zero; };
}

Hamiltonian::Hamiltonian(std::function<HermitianOperator(double)> value,
                         std::function<HermitianOperator(double)> derivative)
    : value_(std::move(value)), derivative_(std::move(derivative)),
      time_dependent_(true) {
  if (!value_ || !derivative_) {
    throw ValidationError("Hamiltonian: value and derivative callables required");
  }
  dim_ = value_(0.0).dim();
  if (derivative_(0.0).dim() != dim_) {
    throw DimensionError("Hamiltonian: derivative dimension differs from value");
  }
}

DynamicsSpec::DynamicsSpec(Hamiltonian h, std::vector<Dissipator> dissipators)
    : h_(std::move(h)), dim_(h_.dim()) {
  ds_.reserve(dissipators.size());
  for (std::size_t k = 0; k < dissipators.size(); ++k) {
    Dissipator& d = dissipators[k];
    if (d.op.rows() != dim_ || d.op.cols() != dim_) {
      std::ostringstream os;
      os << "DynamicsSpec: jump operator " << k << " is " << d.op.rows() << "x"
         << d.op.cols() << ", expected " << dim_ << "x" << dim_;
      throw DimensionError(os.str());
    }
    if (!d.op.allFinite()) {
      throw ValidationError("DynamicsSpec: jump operator has non-finite entries");
    }
    if (!(d.rate >= 0.0)) {
      std::ostringstream os;
      os << "DynamicsSpec: rate " << d.rate << " for jump operator " << k
         << " must be >= 0";
      throw ValidationError(os.str());
    }
    if (d.rate == 0.0) {
      continue;  // no-op channel
    }
    l_dag_.push_back(d.op.adjoint());
    l_dag_l_.push_back(l_dag_.back() * d.op);
    ds_.push_back(std::move(d));
  }
}

ComplexMatrix DynamicsSpec::apply_generator(double t, const ComplexMatrix& m) const {
  const ComplexMatrix h = h_.value(t).matrix();
  ComplexMatrix out = Complex(0.0, -1.0) * (h * m - m * h);
  for (std::size_t k = 0; k < ds_.size(); ++k) {
    const ComplexMatrix& l = ds_[k].op;
    out.noalias() += ds_[k].rate *
        (l * m * l_dag_[k] - 0.5 * (l_dag_l_[k] * m + m * l_dag_l_[k]));
  }
  return out;
}

ComplexMatrix liouvillian_apply(const DynamicsSpec& spec, double t,
                                const DensityMatrix& rho) {
  if (rho.dim() != spec.dim()) {
    throw DimensionError("liouvillian_apply: state dimension does not match spec");
  }
  ComplexMatrix out = spec.apply_generator(t, rho.matrix());
  const double tr = std::abs(out.trace());
  const double herm = max_abs(ComplexMatrix(out - out.adjoint()));
  if (tr > 1e-12 || herm > 1e-12) {
    std::ostringstream os;
    os << "liouvillian_apply: output violates trace (" << tr
       << ") or hermiticity (" << herm << ") bound 1e-12";
    throw ValidationError(os.str());
  }
  return out;
}

ComplexMatrix rk4_step(const DynamicsSpec& spec, const ComplexMatrix& m, double t,
                       double h) {
  const ComplexMatrix k1 = spec.apply_generator(t, m);
  const ComplexMatrix k2 = spec.apply_generator(t + 0.5 * h, m + (0.5 * h) * k1);
  const ComplexMatrix k3 = spec.apply_generator(t + 0.5 * h, m + (0.5 * h) * k2);
  const ComplexMatrix k4 = spec.apply_generator(t + h, m + h * k3);
  return m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

ComplexMatrix rk4_step_with_k1(const DynamicsSpec& spec, const ComplexMatrix& m,
                               double t, double h, const ComplexMatrix& k1) {
  const ComplexMatrix k2 = spec.apply_generator(t + 0.5 * h, m + (0.5 * h) * k1);
  const ComplexMatrix k3 = spec.apply_generator(t + 0.5 * h, m + (0.5 * h) * k2);
  const ComplexMatrix k4 = spec.apply_generator(t + h, m + h * k3);
  return m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct ProjectionOutcome {
  ComplexMatrix state;
  double magnitude = 0.0;
};

// Symmetrize, clamp eigenvalues at zero, renormalize trace.  Violations beyond
// 1e-8 before projection abort the run.
ProjectionOutcome project_to_manifold(const ComplexMatrix& m, double t) {
  const double herm = max_abs(ComplexMatrix(m - m.adjoint()));
  const Complex tr = m.trace();
  const double trace_defect = std::abs(tr - Complex(1.0, 0.0));
  ComplexMatrix sym = 0.5 * (m + m.adjoint());

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "integrate: eigensolver failed during projection at t=" << t;
    throw EigensolverError(os.str());
  }
  const double lmin = es.eigenvalues().minCoeff();
  if (herm > 1e-8 || trace_defect > 1e-8 || lmin < -1e-8) {
    std::ostringstream os;
    os << "integrate: state left the density-matrix manifold at t=" << t
       << " (hermiticity defect=" << herm << ", trace defect=" << trace_defect
       << ", min eigenvalue=" << lmin << ")";
    throw IntegrationError(os.str());
  }

  ProjectionOutcome out;
  if (lmin < 0.0) {
    const RealVector clamped = es.eigenvalues().cwiseMax(0.0);
    sym = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
    sym = ComplexMatrix(0.5 * (sym + sym.adjoint()));
  }
  sym /= sym.trace().real();
  out.magnitude = max_abs(ComplexMatrix(sym - m));
  out.state = std::move(sym);
  return out;
}

}  // namespace

Trajectory integrate(const DynamicsSpec& spec, const DensityMatrix& rho0,
                     std::pair<double, double> t_span,
                     const IntegratorControl& control) {
  const double t0 = t_span.first;
  const double t1 = t_span.second;
  if (!(t1 > t0)) {
    throw ValidationError("integrate: t_span must satisfy t1 > t0");
  }
  if (!(control.tol > 0.0) || !(control.min_step > 0.0) ||
      !(control.safety > 0.0) || control.sample_count == 1) {
    throw ValidationError("integrate: invalid integrator control");
  }
  if (rho0.dim() != spec.dim()) {
    throw DimensionError("integrate: initial state dimension does not match spec");
  }

  // Boundaries the stepper must land on exactly.
  std::vector<double> boundaries;
  const bool uniform = control.sample_count >= 2;
  if (uniform) {
    const double dt = (t1 - t0) / (control.sample_count - 1);
    boundaries.reserve(control.sample_count - 1);
    for (int i = 1; i < control.sample_count; ++i) {
      boundaries.push_back(t0 + i * dt);
    }
    boundaries.back() = t1;
  } else {
    boundaries.push_back(t1);
  }

  std::vector<double> times{t0};
  std::vector<DensityMatrix> states{rho0};
  double max_projection = 0.0;
  long accepted = 0, rejected = 0;

  ComplexMatrix m = rho0.matrix();
  double t = t0;
  std::size_t bi = 0;

  const double d0 = max_abs(spec.apply_generator(t0, m));
  double h_prop = std::min({(t1 - t0) / 10.0, 0.1 / (1.0 + d0), control.max_step});
  h_prop = std::max(h_prop, control.min_step);

  std::optional<ComplexMatrix> k1;

  while (bi < boundaries.size()) {
    const double t_target = boundaries[bi];
    const double gap = t_target - t;
    const bool clamped = h_prop >= gap;
    const double h = clamped ? gap : h_prop;

    if (!k1) {
      k1 = spec.apply_generator(t, m);
    }
    const ComplexMatrix full = rk4_step_with_k1(spec, m, t, h, *k1);
    const ComplexMatrix mid = rk4_step_with_k1(spec, m, t, 0.5 * h, *k1);
    const ComplexMatrix two = rk4_step(spec, mid, t + 0.5 * h, 0.5 * h);
    const double err = max_abs(ComplexMatrix(full - two)) / 15.0;

    if (err > control.tol && !(clamped && h <= control.min_step)) {
      ++rejected;
      const double shrink =
          std::max(0.2, control.safety * std::pow(control.tol / err, 0.2));
      h_prop = h * shrink;
      if (h_prop < control.min_step) {
        std::ostringstream os;
        os << "integrate: step size underflow at t=" << t << " (h=" << h_prop
           << " < min_step=" << control.min_step << ", local error=" << err
           << ", tol=" << control.tol << ")";
        throw IntegrationError(os.str());
      }
      continue;
    }

    ++accepted;
    k1.reset();
    ProjectionOutcome proj = project_to_manifold(two, t + h);
    max_projection = std::max(max_projection, proj.magnitude);
    if (proj.magnitude > control.projection_abort) {
      std::ostringstream os;
      os << "integrate: projection magnitude " << proj.magnitude << " exceeds "
         << control.projection_abort << " at t=" << (t + h);
      throw IntegrationError(os.str());
    }
    m = std::move(proj.state);

    if (clamped) {
      t = t_target;
      ++bi;
      if (uniform || bi == boundaries.size()) {
        times.push_back(t);
        states.emplace_back(m);
      }
    } else {
      t += h;
      if (!uniform) {
        times.push_back(t);
        states.emplace_back(m);
      }
    }

    const double grow = err > 0.0
        ? std::clamp(control.safety * std::pow(control.tol / err, 0.2), 0.2, 5.0)
        : 5.0;
    h_prop = std::min(h * grow, control.max_step);
    h_prop = std::max(h_prop, control.min_step);
  }

  return Trajectory{std::move(times), std::move(states), spec, max_projection,
                    accepted, rejected};
}

namespace {

std::map<std::string, double> checked_params(
    const std::map<std::string, double>& params,
    const std::vector<std::string>& expected, const char* channel) {
  for (const auto& key : expected) {
    if (!params.count(key)) {
      std::ostringstream os;
      os << "builtin_channel " << channel << ": missing parameter '" << key << "'";
      throw ValidationError(os.str());
    }
  }
  for (const auto& [key, value] : params) {
    (void)value;
    if (std::find(expected.begin(), expected.end(), key) == expected.end()) {
      std::ostringstream os;
      os << "builtin_channel " << channel << ": unknown parameter '" << key << "'";
      throw ValidationError(os.str());
    }
  }
  return params;
}

Hamiltonian qubit_hamiltonian(double eps) {
  return Hamiltonian(HermitianOperator(ComplexMatrix(-eps * pauli_z())));
}

ComplexMatrix lowering_to_ground() {
  // |g><e| with the ground state |0> of H = -eps*sigma_z (eps > 0).
  ComplexMatrix l(2, 2);
  l << 0, 1, 0, 0;
  return l;
}

}  // namespace

ChannelKind channel_from_name(std::string_view name) {
  if (name == "pure_dephasing") return ChannelKind::pure_dephasing;
  if (name == "amplitude_damping") return ChannelKind::amplitude_damping;
  if (name == "thermal_qubit") return ChannelKind::thermal_qubit;
  if (name == "depolarizing") return ChannelKind::depolarizing;
  if (name == "closed") return ChannelKind::closed;
  throw ValidationError("unknown channel '" + std::string(name) + "'");
}

DynamicsSpec builtin_channel(ChannelKind kind,
                             const std::map<std::string, double>& params) {
  switch (kind) {
    case ChannelKind::pure_dephasing: {
      const auto p = checked_params(params, {"eps", "Gamma"}, "pure_dephasing");
      return DynamicsSpec(qubit_hamiltonian(p.at("eps")),
                          {{pauli_z(), 0.5 * p.at("Gamma")}});
    }
    case ChannelKind::amplitude_damping: {
      const auto p = checked_params(params, {"eps", "gamma"}, "amplitude_damping");
      return DynamicsSpec(qubit_hamiltonian(p.at("eps")),
                          {{lowering_to_ground(), p.at("gamma")}});
    }
    case ChannelKind::thermal_qubit: {
      const auto p =
          checked_params(params, {"eps", "gamma", "nbar"}, "thermal_qubit");
      const double gamma = p.at("gamma");
      const double nbar = p.at("nbar");
      if (nbar < 0.0) {
        throw ValidationError("builtin_channel thermal_qubit: nbar must be >= 0");
      }
      const ComplexMatrix down = lowering_to_ground();
      const ComplexMatrix up = down.adjoint();
      return DynamicsSpec(qubit_hamiltonian(p.at("eps")),
                          {{down, gamma * (nbar + 1.0)}, {up, gamma * nbar}});
    }
    case ChannelKind::depolarizing: {
      const auto p = checked_params(params, {"eps", "gamma"}, "depolarizing");
      const double r = 0.25 * p.at("gamma");
      return DynamicsSpec(qubit_hamiltonian(p.at("eps")),
                          {{pauli_x(), r}, {pauli_y(), r}, {pauli_z(), r}});
    }
    case ChannelKind::closed: {
      const auto p = checked_params(params, {"eps"}, "closed");
      return DynamicsSpec(qubit_hamiltonian(p.at("eps")));
    }
  }
  throw ValidationError("builtin_channel: unreachable channel kind");
}

DynamicsSpec builtin_channel(std::string_view name,
                             const std::map<std::string, double>& params) {
  return builtin_channel(channel_from_name(name), params);
}

}  // namespace oqt
