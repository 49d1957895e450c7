#include "oqt/bloch.hpp"

#include <cmath>
#include <sstream>

namespace oqt {
namespace {

ComplexMatrix make_pauli(int k) {
  ComplexMatrix m(2, 2);
  const Complex i(0.0, 1.0);
  switch (k) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, -i, i, 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) {
    throw ValidationError(std::string(what) + ": non-finite vector");
  }
}

void require_qubit(Eigen::Index dim, const char* what) {
  if (dim != 2) {
    std::ostringstream os;
    os << what << ": expected dimension 2, got " << dim;
    throw DimensionError(os.str());
  }
}

}  // namespace

const ComplexMatrix& pauli_x() { static const ComplexMatrix m = make_pauli(0); return m; }
const ComplexMatrix& pauli_y() { static const ComplexMatrix m = make_pauli(1); return m; }
const ComplexMatrix& pauli_z() { static const ComplexMatrix m = make_pauli(2); return m; }

BlochState::BlochState(Vec3 b) : B(std::move(b)) {
  require_finite(B, "BlochState");
  if (B.norm() > 1.0 + 1e-10) {
    std::ostringstream os;
    os << "BlochState: |B| = " << B.norm() << " exceeds 1";
    throw ValidationError(os.str());
  }
}

BlochState to_bloch(const DensityMatrix& rho) {
  require_qubit(rho.dim(), "to_bloch");
  Vec3 b;
  b.x() = trace_product(rho.matrix(), pauli_x()).real();
  b.y() = trace_product(rho.matrix(), pauli_y()).real();
  b.z() = trace_product(rho.matrix(), pauli_z()).real();
  return BlochState(b);
}

DensityMatrix from_bloch(const Vec3& b) {
  const BlochState s(b);  // validates
  ComplexMatrix m = 0.5 * (ComplexMatrix::Identity(2, 2) + s.B.x() * pauli_x() +
                           s.B.y() * pauli_y() + s.B.z() * pauli_z());
  return DensityMatrix(std::move(m));
}

Vec3 to_field_vector(const HermitianOperator& a) {
  require_qubit(a.dim(), "to_field_vector");
  Vec3 v;
  v.x() = -0.5 * trace_product(a.matrix(), pauli_x()).real();
  v.y() = -0.5 * trace_product(a.matrix(), pauli_y()).real();
  v.z() = -0.5 * trace_product(a.matrix(), pauli_z()).real();
  return v;
}

HermitianOperator from_field_vector(const Vec3& a) {
  require_finite(a, "from_field_vector");
  return HermitianOperator(
      ComplexMatrix(-(a.x() * pauli_x() + a.y() * pauli_y() + a.z() * pauli_z())));
}

double coherence_rate_triple(const Vec3& b, const Vec3& o, const Vec3& w) {
  require_finite(b, "coherence_rate_triple");
  require_finite(o, "coherence_rate_triple");
  require_finite(w, "coherence_rate_triple");
  return 2.0 * b.dot(o.cross(w));
}

Vec3 torque(const Vec3& b, const Vec3& v) {
  require_finite(b, "torque");
  require_finite(v, "torque");
  return b.cross(v);
}

double qubit_power(const Vec3& b, const Vec3& v, const Vec3& omega_vec) {
  require_finite(omega_vec, "qubit_power");
  const double via_torque = -omega_vec.dot(torque(b, v));
  const double via_triple = coherence_rate_triple(b, v, -0.5 * omega_vec);
  const double scale = std::max(1.0, std::abs(via_torque));
  if (std::abs(via_torque - via_triple) > 1e-12 * scale) {
    throw Error("qubit_power: torque and triple-product forms disagree");
  }
  return via_torque;
}

double qubit_heat_rate(const Vec3& b, const Vec3& b_dot, const Vec3& v) {
  require_finite(b, "qubit_heat_rate");
  require_finite(b_dot, "qubit_heat_rate");
  require_finite(v, "qubit_heat_rate");
  const double bn = b.norm();
  if (bn == 0.0) {
    throw ValidationError("qubit_heat_rate: |B| = 0, direction undefined");
  }
  const double bn_dot = b.dot(b_dot) / bn;
  return -bn_dot * (b.dot(v) / bn);
}

namespace {
double effective_lambda(double eps, double lambda) {
  return std::isnan(lambda) ? 2.0 * eps : lambda;
}
}  // namespace

Vec3 dephasing_trajectory(double bx, double bz, double eps, double gamma, double t,
                          double lambda) {
  const double lam = effective_lambda(eps, lambda);
  const double env = bx * std::exp(-gamma * t);
  return Vec3(env * std::cos(lam * t), env * std::sin(lam * t), bz);
}

Vec3 dephasing_trajectory_rate(double bx, double bz, double eps, double gamma,
                               double t, double lambda) {
  (void)bz;
  const double lam = effective_lambda(eps, lambda);
  const double env = bx * std::exp(-gamma * t);
  const double c = std::cos(lam * t);
  const double s = std::sin(lam * t);
  return Vec3(env * (-lam * s - gamma * c), env * (lam * c - gamma * s), 0.0);
}

double dephasing_heat_closed_form(double b0_modulus, double b_z, double eps) {
  const double abz = std::abs(b_z);
  if (!(b0_modulus > 0.0) || b0_modulus > 1.0 + 1e-10 || abz > b0_modulus + 1e-12) {
    std::ostringstream os;
    os << "dephasing_heat_closed_form: need 0 <= |B_z| <= |B0| <= 1, got |B_z|="
       << abz << ", |B0|=" << b0_modulus;
    throw ValidationError(os.str());
  }
  if (abz == 0.0) {
    return 0.0;  // -eps*B_z*ln|B_z| -> 0 as B_z -> 0
  }
  return -eps * b_z * std::log(abz / b0_modulus);
}

Vec3 minimal_angular_velocity(const Vec3& b, const Vec3& b_dot) {
  require_finite(b, "minimal_angular_velocity");
  require_finite(b_dot, "minimal_angular_velocity");
  const double bn = b.norm();
  if (bn == 0.0) {
    throw ValidationError("minimal_angular_velocity: |B| = 0, direction undefined");
  }
  const Vec3 bhat = b / bn;
  const Vec3 bhat_dot = (b_dot - bhat * bhat.dot(b_dot)) / bn;
  return bhat.cross(bhat_dot);
}

}  // namespace oqt
