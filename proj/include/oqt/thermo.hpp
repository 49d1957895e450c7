#pragma once

// Spectral decomposition of a state trajectory, rho = sum_j lambda_j P_j, and
// the rate bookkeeping built on it:
//
//   d<O>/dt = sum_j lambda_dot_j <psi_j|O|psi_j>   (thermal term)
//           + <dO/dt>                              (drive term)
//           + i<[Omega, O]>                        (coherence term)
//
// where Omega is the Hermitian generator of the eigenbasis motion,
// |psi_j(t+dt)> = (I - i Omega dt)|psi_j(t)>.  Heat rate is the thermal term
// with O = H; work rate is the expectation of the power operator
// dH/dt + i[Omega, H]; the two must add up to dE/dt (first-law audit).
//
// lambda_dot is evaluated exactly as <psi_j|L(rho)|psi_j> from the known
// generator, never by finite differences.  Omega is recovered from the
// off-diagonal of L(rho) in the eigenbasis; its diagonal and any entries
// inside degenerate blocks are unconstrained by rho's motion (gauge freedom)
// and are pinned to zero (parallel-transport gauge).

#include "oqt/dynamics.hpp"
#include "oqt/types.hpp"

#include <optional>
#include <vector>

namespace oqt {

// Eigenbasis motion inside a degenerate block is not identifiable from the
// trajectory; raised when the generator actually drives such a block.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

struct SpectralFrame {
  double t = 0.0;
  RealVector eigenvalues;        // continuity-ordered, not sorted
  ComplexMatrix eigenvectors;    // columns, phase-aligned with previous frame
  RealVector lambda_dot;
  std::vector<std::vector<int>> degeneracy_blocks;
  bool crossing_ambiguous = false;  // overlap matching was ambiguous here
};

enum class OmegaGauge { parallel_transport };

struct OmegaGenerator {
  HermitianOperator matrix;
  OmegaGauge gauge = OmegaGauge::parallel_transport;
  bool degenerate_blocks_zeroed = false;  // any non-singleton block present
};

struct EhrenfestDecomposition {
  double thermal_term = 0.0;
  double drive_term = 0.0;
  double coherence_term = 0.0;
  double total = 0.0;
  std::optional<double> fd_reference;  // centered finite-difference check value
  std::optional<double> residual;      // total - fd_reference
};

struct ThermoRecord {
  double t = 0.0;
  double E = 0.0;
  double Q_dot = 0.0;
  double W_dot = 0.0;
  double S = 0.0;      // in units of k_B
  double S_dot = 0.0;
  double Q_accum = 0.0;
  double W_accum = 0.0;
  double first_law_residual = 0.0;  // dE/dt - Q_dot - W_dot
  bool flagged = false;
};

struct RobertsonCheck {
  double lhs = 0.0;  // |<[Omega, O]>|
  double rhs = 0.0;  // 2 sigma_Omega sigma_O
  bool ok = false;
};

struct AuditOptions {
  double deg_tol = 1e-8;
  double leak_tol = 1e-7;
  double lambda_floor = 1e-14;
  double audit_tol = 1e-7;
};

// Eigendecompose every sample, matching eigenvector order to the previous
// frame by overlap (greedy, optimal-assignment fallback below 0.7) and fixing
// phases so <psi_j(prev)|psi_j(now)> is real and nonnegative.  Rows whose top
// two overlaps agree within 1e-6 mark the frame ambiguous and widen the
// degeneracy block.
std::vector<SpectralFrame> track_spectrum(const Trajectory& traj,
                                          const DynamicsSpec& spec,
                                          double deg_tol = 1e-8);

// Omega_{jk} = i <psi_j|rho_dot|psi_k> / (lambda_k - lambda_j) off the
// diagonal; zero on the diagonal and inside degenerate blocks.  Raises
// DegeneracyError if |<psi_j|rho_dot|psi_k>| > leak_tol inside a block.
OmegaGenerator reconstruct_omega(const SpectralFrame& frame,
                                 const ComplexMatrix& rho_dot,
                                 double deg_tol = 1e-8, double leak_tol = 1e-7);

EhrenfestDecomposition ehrenfest_rate(const SpectralFrame& frame,
                                      const OmegaGenerator& omega,
                                      const DensityMatrix& rho,
                                      const HermitianOperator& observable,
                                      const HermitianOperator& observable_rate);

// dH/dt + i[Omega, H].
HermitianOperator power_operator(const OmegaGenerator& omega,
                                 const HermitianOperator& h,
                                 const HermitianOperator& h_rate);

// sum_j lambda_dot_j <psi_j|H|psi_j>.
double heat_rate(const SpectralFrame& frame, const HermitianOperator& h);

// S = -sum lambda_j ln lambda_j and its rate -sum lambda_dot_j ln lambda_j.
// Weights below the floor contribute -lambda_dot * ln(floor) when growing and
// nothing otherwise; a zero weight with lambda_dot < -1e-12 is an error
// (state leaving the simplex).
struct EntropyRate {
  double S = 0.0;
  double S_dot = 0.0;
};
EntropyRate entropy_and_rate(const SpectralFrame& frame,
                             double lambda_floor = 1e-14);

RobertsonCheck robertson_check(const DensityMatrix& rho,
                               const OmegaGenerator& omega,
                               const HermitianOperator& observable);

// Full per-sample energy bookkeeping along a trajectory, with trapezoid
// accumulation of Q and W.  Samples whose first-law residual exceeds
// audit_tol are flagged, not dropped.
std::vector<ThermoRecord> first_law_audit(const Trajectory& traj,
                                          const DynamicsSpec& spec,
                                          const AuditOptions& options = {});
std::vector<ThermoRecord> first_law_audit(const Trajectory& traj,
                                          const DynamicsSpec& spec,
                                          const std::vector<SpectralFrame>& frames,
                                          const AuditOptions& options = {});

// Centered finite difference of <O> along the generator flow starting from
// rho at time t (single RK4 steps to t +/- h); independent of the spectral
// pipeline above, which is exactly why it serves as its reference.
double observable_rate_fd(const DynamicsSpec& spec, const DensityMatrix& rho,
                          double t, const HermitianOperator& observable,
                          double h = 1e-4);

namespace detail {
// Minimum-cost perfect assignment on a square cost matrix; returns col index
// per row.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);
std::vector<std::vector<int>> degeneracy_partition(const RealVector& values,
                                                   double deg_tol);
}  // namespace detail

}  // namespace oqt
