#pragma once

// Markovian open-system evolution:
//   drho/dt = -i[H(t), rho] + sum_k gamma_k (L_k rho L_k^dag
//                                            - (L_k^dag L_k rho + rho L_k^dag L_k)/2)
// in units with hbar = 1, integrated with classic RK4 under step-doubling
// error control.

#include "oqt/types.hpp"

#include <functional>
#include <limits>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

namespace oqt {

class IntegrationError : public Error {
 public:
  using Error::Error;
};

// H(t) with an exact time derivative.  Static Hamiltonians carry a zero
// derivative; time-dependent ones must supply both callables.
class Hamiltonian {
 public:
  explicit Hamiltonian(HermitianOperator constant);
  Hamiltonian(std::function<HermitianOperator(double)> value,
              std::function<HermitianOperator(double)> derivative);

  HermitianOperator value(double t) const { return value_(t); }
  HermitianOperator derivative(double t) const { return derivative_(t); }
  bool time_dependent() const noexcept { return time_dependent_; }
  Eigen::Index dim() const noexcept { return dim_; }

 private:
  std::function<HermitianOperator(double)> value_;
  std::function<HermitianOperator(double)> derivative_;
  bool time_dependent_ = false;
  Eigen::Index dim_ = 0;
};

struct Dissipator {
  ComplexMatrix op;
  double rate = 0.0;
};

// Immutable problem description.  Jump operators are validated (finite,
// dimension-matched, nonnegative rates; zero-rate entries are dropped) and
// L^dag, L^dag L are precomputed.
class DynamicsSpec {
 public:
  DynamicsSpec(Hamiltonian h, std::vector<Dissipator> dissipators = {});

  Eigen::Index dim() const noexcept { return dim_; }
  const Hamiltonian& hamiltonian() const noexcept { return h_; }
  const std::vector<Dissipator>& dissipators() const noexcept { return ds_; }
  bool closed() const noexcept { return ds_.empty(); }

  // Linear extension of the generator to arbitrary matrices (RK4 stages are
  // not density matrices).
  ComplexMatrix apply_generator(double t, const ComplexMatrix& m) const;

 private:
  Hamiltonian h_;
  std::vector<Dissipator> ds_;
  std::vector<ComplexMatrix> l_dag_;
  std::vector<ComplexMatrix> l_dag_l_;
  Eigen::Index dim_ = 0;
};

// Generator applied to a state; result is traceless and Hermitian within 1e-12.
ComplexMatrix liouvillian_apply(const DynamicsSpec& spec, double t,
                                const DensityMatrix& rho);

struct IntegratorControl {
  double tol = 1e-9;         // local error per step
  double min_step = 1e-12;   // controller underflow -> abort
  double max_step = std::numeric_limits<double>::infinity();
  double safety = 0.9;
  int sample_count = 0;      // >= 2: uniform grid; else record accepted steps
  double projection_abort = 1e-8;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  DynamicsSpec spec;
  double max_projection = 0.0;  // largest per-step manifold correction
  long accepted_steps = 0;
  long rejected_steps = 0;
};

Trajectory integrate(const DynamicsSpec& spec, const DensityMatrix& rho0,
                     std::pair<double, double> t_span,
                     const IntegratorControl& control = {});

// One classic RK4 step of the generator flow on a raw matrix (used by the
// integrator and by finite-difference reference evaluations; h may be
// negative).
ComplexMatrix rk4_step(const DynamicsSpec& spec, const ComplexMatrix& m, double t,
                       double h);

enum class ChannelKind { pure_dephasing, amplitude_damping, thermal_qubit,
                         depolarizing, closed };

ChannelKind channel_from_name(std::string_view name);

// Compiled-in qubit channels (H = -eps*sigma_z throughout):
//   pure_dephasing(eps, Gamma):   L = sigma_z at rate Gamma/2
//   amplitude_damping(eps, gamma): L = |g><e| at rate gamma
//   thermal_qubit(eps, gamma, nbar): decay at gamma(nbar+1), excitation at
//                                    gamma*nbar (amplitude damping at nbar=0)
//   depolarizing(eps, gamma):     sigma_{x,y,z} each at rate gamma/4
//   closed(eps):                  no dissipators
// Unknown names, missing or surplus parameters, and negative rates are errors.
DynamicsSpec builtin_channel(ChannelKind kind,
                             const std::map<std::string, double>& params);
DynamicsSpec builtin_channel(std::string_view name,
                             const std::map<std::string, double>& params);

}  // namespace oqt
