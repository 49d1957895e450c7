#include "oqt/types.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace oqt {
namespace {

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": matrix must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  if (m.rows() < 2) {
    std::ostringstream os;
    os << what << ": dimension must be >= 2, got " << m.rows();
    throw DimensionError(os.str());
  }
  if (!m.allFinite()) {
    throw ValidationError(std::string(what) + ": matrix has non-finite entries");
  }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(os.str());
  }
}

double hermiticity_defect_of(const ComplexMatrix& m) {
  return max_abs(ComplexMatrix(m - m.adjoint()));
}

ComplexMatrix symmetrized(const ComplexMatrix& m) {
  return ComplexMatrix(0.5 * (m + m.adjoint()));
}

// Shared by the HermitianOperator / DensityMatrix overloads.  Input must
// already satisfy the respective type invariants.
Spectrum decompose_checked(const ComplexMatrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << what << ": eigensolver failed to converge (dim=" << m.rows()
       << ", max|entry|=" << max_abs(m)
       << ", hermiticity defect=" << hermiticity_defect_of(m) << ")";
    throw EigensolverError(os.str());
  }

  const Eigen::Index n = m.rows();
  Spectrum s;
  s.eigenvalues = es.eigenvalues().reverse();          // ascending -> descending
  s.eigenvectors = es.eigenvectors().rowwise().reverse();

  // Canonical phase: largest-modulus component real positive.
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index imax = 0;
    s.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
    const Complex pivot = s.eigenvectors(imax, j);
    const double mag = std::abs(pivot);
    if (mag > 0.0) {
      s.eigenvectors.col(j) *= std::conj(pivot) / mag;
    }
  }

  const double ortho =
      max_abs(ComplexMatrix(s.eigenvectors.adjoint() * s.eigenvectors -
                            ComplexMatrix::Identity(n, n)));
  const double resid = max_abs(ComplexMatrix(reconstruct(s) - m));
  if (ortho > tol::spectrum_residual || resid > tol::spectrum_residual) {
    std::ostringstream os;
    os << what << ": unusable factorization (orthonormality defect=" << ortho
       << ", reconstruction residual=" << resid << ", dim=" << n << ")";
    throw EigensolverError(os.str());
  }
  return s;
}

}  // namespace

HermitianOperator::HermitianOperator(ComplexMatrix a) : m_(std::move(a)) {
  require_square(m_, "HermitianOperator");
  defect_ = hermiticity_defect_of(m_);
  if (defect_ > tol::hermitian_reject) {
    std::ostringstream os;
    os << "HermitianOperator: hermiticity defect " << defect_ << " exceeds "
       << tol::hermitian_reject;
    throw ValidationError(os.str());
  }
  m_ = symmetrized(m_);
}

HermitianOperator HermitianOperator::zero(Eigen::Index n) {
  return HermitianOperator(ComplexMatrix::Zero(n, n));
}

HermitianOperator HermitianOperator::identity(Eigen::Index n) {
  return HermitianOperator(ComplexMatrix::Identity(n, n));
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
  require_square(m_, "DensityMatrix");

  const double defect = hermiticity_defect_of(m_);
  if (defect > tol::hermitian_defect) {
    std::ostringstream os;
    os << "DensityMatrix: hermiticity defect " << defect << " exceeds "
       << tol::hermitian_defect;
    throw ValidationError(os.str());
  }
  m_ = symmetrized(m_);

  const Complex tr = m_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > tol::trace_defect) {
    std::ostringstream os;
    os << "DensityMatrix: trace " << tr.real() << (tr.imag() < 0 ? "-" : "+")
       << std::abs(tr.imag()) << "i deviates from 1 beyond " << tol::trace_defect;
    throw ValidationError(os.str());
  }

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m_);
  if (es.info() != Eigen::Success) {
    throw EigensolverError("DensityMatrix: eigensolver failed during validation");
  }
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < tol::eigenvalue_floor) {
    std::ostringstream os;
    os << "DensityMatrix: eigenvalue " << lmin << " below floor "
       << tol::eigenvalue_floor;
    throw ValidationError(os.str());
  }
  if (lmin < 0.0) {
    const RealVector clamped = es.eigenvalues().cwiseMax(0.0);
    m_ = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
    m_ = symmetrized(m_);
    m_ /= m_.trace().real();
  }
}

Spectrum hermitian_eigendecompose(const HermitianOperator& a) {
  return decompose_checked(a.matrix(), "hermitian_eigendecompose");
}

Spectrum hermitian_eigendecompose(const DensityMatrix& rho) {
  return decompose_checked(rho.matrix(), "hermitian_eigendecompose");
}

ComplexMatrix reconstruct(const Spectrum& s) {
  return s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.adjoint();
}

double expectation(const DensityMatrix& rho, const HermitianOperator& a) {
  require_same_dim(rho.dim(), a.dim(), "expectation");
  const Complex tr = trace_product(rho.matrix(), a.matrix());
  if (std::abs(tr.imag()) > tol::expectation_imag) {
    std::ostringstream os;
    os << "expectation: imaginary residue " << tr.imag() << " exceeds "
       << tol::expectation_imag;
    throw ValidationError(os.str());
  }
  return tr.real();
}

double variance(const DensityMatrix& rho, const HermitianOperator& a) {
  require_same_dim(rho.dim(), a.dim(), "variance");
  const ComplexMatrix a2 = a.matrix() * a.matrix();
  const Complex tr2 = trace_product(rho.matrix(), a2);
  if (std::abs(tr2.imag()) > tol::expectation_imag) {
    throw ValidationError("variance: imaginary residue in <A^2>");
  }
  const double mean = expectation(rho, a);
  const double var = tr2.real() - mean * mean;
  if (var < -1e-12) {
    std::ostringstream os;
    os << "variance: negative value " << var << " beyond rounding allowance";
    throw ValidationError(os.str());
  }
  return var < 0.0 ? 0.0 : var;
}

ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b) {
  require_same_dim(a.dim(), b.dim(), "commutator");
  return commutator(a.matrix(), b.matrix());
}

}  // namespace oqt
