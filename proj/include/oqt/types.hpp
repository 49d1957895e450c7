#pragma once

// Dense operator types for finite-dimensional quantum states, plus the handful
// of primitive operations everything else is written in terms of.  All math is
// Eigen; scalars are double, matrices are dynamically sized complex.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace oqt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

namespace tol {
inline constexpr double hermitian_defect = 1e-12;   // DensityMatrix / Spectrum inputs
inline constexpr double hermitian_reject = 1e-8;    // HermitianOperator construction
inline constexpr double trace_defect = 1e-10;
inline constexpr double eigenvalue_floor = -1e-10;  // most negative admissible weight
inline constexpr double spectrum_residual = 1e-10;
inline constexpr double expectation_imag = 1e-12;
}  // namespace tol

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that violate a type or operation contract (shape, hermiticity, trace, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Eigensolver did not converge or produced an unusable factorization.
class EigensolverError : public Error {
 public:
  using Error::Error;
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.derived().cwiseAbs().maxCoeff();
}

// tr(a * b) without forming the product.
template <typename DerivedA, typename DerivedB>
Complex trace_product(const Eigen::MatrixBase<DerivedA>& a,
                      const Eigen::MatrixBase<DerivedB>& b) {
  return a.derived().cwiseProduct(b.derived().transpose()).sum();
}

template <typename DerivedA, typename DerivedB>
ComplexMatrix commutator(const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
  return a.derived() * b.derived() - b.derived() * a.derived();
}

// Observable / generator: square, dim >= 2, Hermitian.  The stored matrix is
// the symmetrized (A + A^dag)/2 of the input; the input's deviation from
// hermiticity is recorded and inputs beyond 1e-8 are rejected.
class HermitianOperator {
 public:
  explicit HermitianOperator(ComplexMatrix a);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  double hermiticity_defect() const noexcept { return defect_; }

  static HermitianOperator zero(Eigen::Index n);
  static HermitianOperator identity(Eigen::Index n);

 private:
  ComplexMatrix m_;
  double defect_ = 0.0;
};

// Quantum state: Hermitian within 1e-12, unit trace within 1e-10, eigenvalues
// >= -1e-10.  Weights in [-1e-10, 0) are clamped to zero (with trace
// renormalization); anything more negative is rejected.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

// Eigenvalues descending, eigenvectors as matching orthonormal columns with a
// canonical phase (largest-modulus component real positive).
struct Spectrum {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;
};

Spectrum hermitian_eigendecompose(const HermitianOperator& a);
Spectrum hermitian_eigendecompose(const DensityMatrix& rho);

// Sum of lambda_j |psi_j><psi_j|; inverse of the decomposition.
ComplexMatrix reconstruct(const Spectrum& s);

double expectation(const DensityMatrix& rho, const HermitianOperator& a);

// <A^2> - <A>^2, clamped to >= 0 (raises if below -1e-12).
double variance(const DensityMatrix& rho, const HermitianOperator& a);

ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b);

}  // namespace oqt
