#pragma once

// Qubit picture: rho = (I + B.sigma)/2, observables O = -o.sigma, generators
// Omega = -w.sigma.  Every rate in the dense pipeline collapses to 3-vector
// algebra here, which is what makes this module useful both as a fast path and
// as an independent oracle for the N=2 case.

#include "oqt/types.hpp"

#include <Eigen/Geometry>

namespace oqt {

const ComplexMatrix& pauli_x();
const ComplexMatrix& pauli_y();
const ComplexMatrix& pauli_z();

// Validated Bloch vector of a state: |B| <= 1 (+1e-10 rounding allowance).
struct BlochState {
  Vec3 B;
  explicit BlochState(Vec3 b);
};

BlochState to_bloch(const DensityMatrix& rho);
DensityMatrix from_bloch(const Vec3& b);

// a such that A = -a.sigma + (tr A / 2) I.
Vec3 to_field_vector(const HermitianOperator& a);
// -a.sigma.
HermitianOperator from_field_vector(const Vec3& a);

// Coherence contribution to d<O>/dt for O = -o.sigma under Omega = -w.sigma:
// 2 B.(o x w).  Vanishes whenever B, o, w are coplanar; the maximum over
// orientations is 2|w||o||B| (rectangular-box configuration).
double coherence_rate_triple(const Vec3& b, const Vec3& o, const Vec3& w);

// tau = B x v for H = -v.sigma.
Vec3 torque(const Vec3& b, const Vec3& v);

// Work rate -omega_vec . (B x v), where omega_vec is the angular velocity of
// the Bloch unit vector (omega_vec = -2w).  Internally cross-checked against
// coherence_rate_triple(b, v, -omega_vec/2).
double qubit_power(const Vec3& b, const Vec3& v, const Vec3& omega_vec);

// Heat rate -(d|B|/dt)(Bhat . v) from B and dB/dt; |B| = 0 is rejected
// (direction undefined).
double qubit_heat_rate(const Vec3& b, const Vec3& b_dot, const Vec3& v);

// Pure-dephasing trajectory from B0 = (Bx, 0, Bz):
//   B(t) = (Bx cos(Lambda t) e^{-Gamma t}, Bx sin(Lambda t) e^{-Gamma t}, Bz).
// Lambda is a free precession parameter; if NaN it defaults to 2*eps.  The
// GKLS channel with H = -eps sigma_z realizes Lambda = -2*eps in this
// parametrization; heat, energy and entropy do not depend on the sign.
Vec3 dephasing_trajectory(double bx, double bz, double eps, double gamma, double t,
                          double lambda = std::nan(""));
Vec3 dephasing_trajectory_rate(double bx, double bz, double eps, double gamma,
                               double t, double lambda = std::nan(""));

// Total heat exchanged along the full dephasing trajectory:
//   Q = -eps * B_z * ln(|B_z| / |B0|),   with Q -> 0 as B_z -> 0.
// Requires 0 <= |B_z| <= |B0| <= 1.
double dephasing_heat_closed_form(double b0_modulus, double b_z, double eps);

// Minimal-norm angular velocity of the Bloch direction: Bhat x dBhat/dt,
// i.e. the unique solution of dBhat/dt = omega x Bhat with omega _|_ Bhat.
// This is the vector the parallel-transport-gauge generator reconstructs.
Vec3 minimal_angular_velocity(const Vec3& b, const Vec3& b_dot);

}  // namespace oqt
