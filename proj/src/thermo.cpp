#include "oqt/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace oqt {
namespace detail {

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  // Shortest-augmenting-path assignment with potentials, O(n^3).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n == 0) {
    throw DimensionError("min_cost_assignment: cost matrix must be square");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

std::vector<std::vector<int>> degeneracy_partition(const RealVector& values,
                                                   double deg_tol) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values(a) < values(b); });

  std::vector<std::vector<int>> blocks;
  for (int k = 0; k < n; ++k) {
    if (k == 0 || values(order[k]) - values(order[k - 1]) >= deg_tol) {
      blocks.emplace_back();
    }
    blocks.back().push_back(order[k]);
  }
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return blocks;
}

}  // namespace detail

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<std::vector<int>> blocks_from_union(UnionFind& uf, int n) {
  std::vector<std::vector<int>> grouped(n);
  for (int i = 0; i < n; ++i) grouped[uf.find(i)].push_back(i);
  std::vector<std::vector<int>> blocks;
  for (auto& g : grouped) {
    if (!g.empty()) blocks.push_back(std::move(g));
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return blocks;
}

std::vector<std::vector<int>> merge_partitions(
    const std::vector<std::vector<int>>& a,
    const std::vector<std::vector<int>>& b, int n) {
  UnionFind uf(n);
  for (const auto& block : a) {
    for (std::size_t k = 1; k < block.size(); ++k) uf.unite(block[0], block[k]);
  }
  for (const auto& block : b) {
    for (std::size_t k = 1; k < block.size(); ++k) uf.unite(block[0], block[k]);
  }
  return blocks_from_union(uf, n);
}

void validate_frame(const SpectralFrame& f) {
  const Eigen::Index n = f.eigenvalues.size();
  const double ortho = max_abs(ComplexMatrix(
      f.eigenvectors.adjoint() * f.eigenvectors - ComplexMatrix::Identity(n, n)));
  if (ortho > 1e-10) {
    std::ostringstream os;
    os << "SpectralFrame: orthonormality defect " << ortho << " at t=" << f.t;
    throw ValidationError(os.str());
  }
  if (std::abs(f.eigenvalues.sum() - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "SpectralFrame: eigenvalue sum deviates from 1 by "
       << std::abs(f.eigenvalues.sum() - 1.0) << " at t=" << f.t;
    throw ValidationError(os.str());
  }
  if (std::abs(f.lambda_dot.sum()) > 1e-9) {
    std::ostringstream os;
    os << "SpectralFrame: lambda_dot sum " << f.lambda_dot.sum()
       << " deviates from 0 at t=" << f.t;
    throw ValidationError(os.str());
  }
  if (!f.eigenvalues.allFinite() || !f.lambda_dot.allFinite() ||
      !f.eigenvectors.allFinite()) {
    throw ValidationError("SpectralFrame: non-finite entries");
  }
}

// Greedy global matching on the overlap matrix; returns, for each previous
// index j, the raw column assigned to it, plus the smallest matched overlap.
std::vector<int> greedy_assignment(const Eigen::MatrixXd& overlap,
                                   double* min_matched) {
  const int n = static_cast<int>(overlap.rows());
  std::vector<int> perm(n, -1);
  std::vector<char> row_used(n, 0), col_used(n, 0);
  *min_matched = 1.0;
  for (int step = 0; step < n; ++step) {
    int bi = -1, bj = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (row_used[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (col_used[j]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    perm[bi] = bj;
    row_used[bi] = 1;
    col_used[bj] = 1;
    *min_matched = std::min(*min_matched, best);
  }
  return perm;
}

}  // namespace

std::vector<SpectralFrame> track_spectrum(const Trajectory& traj,
                                          const DynamicsSpec& spec,
                                          double deg_tol) {
  if (traj.states.empty() || traj.times.size() != traj.states.size()) {
    throw ValidationError("track_spectrum: empty or inconsistent trajectory");
  }
  if (!(deg_tol > 0.0)) {
    throw ValidationError("track_spectrum: deg_tol must be positive");
  }
  const int n = static_cast<int>(traj.states.front().dim());

  std::vector<SpectralFrame> frames;
  frames.reserve(traj.states.size());

  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const DensityMatrix& rho = traj.states[i];
    const double t = traj.times[i];

    SpectralFrame f;
    f.t = t;

    std::vector<std::pair<int, int>> ambiguous_pairs;  // raw column indices

    if (i == 0) {
      const Spectrum s = hermitian_eigendecompose(rho);
      f.eigenvalues = s.eigenvalues;
      f.eigenvectors = s.eigenvectors;
    } else {
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
      if (es.info() != Eigen::Success) {
        std::ostringstream os;
        os << "track_spectrum: eigensolver failed at t=" << t;
        throw EigensolverError(os.str());
      }
      const ComplexMatrix& prev = frames.back().eigenvectors;
      const Eigen::MatrixXd overlap =
          (prev.adjoint() * es.eigenvectors()).cwiseAbs();

      double min_matched = 0.0;
      std::vector<int> perm = greedy_assignment(overlap, &min_matched);
      if (min_matched < 0.7) {
        perm = detail::min_cost_assignment(Eigen::MatrixXd(1.0 - overlap.array()));
      }

      for (int r = 0; r < n; ++r) {
        int c1 = -1, c2 = -1;
        double top1 = -1.0, top2 = -1.0;
        for (int c = 0; c < n; ++c) {
          const double o = overlap(r, c);
          if (o > top1) {
            top2 = top1; c2 = c1;
            top1 = o; c1 = c;
          } else if (o > top2) {
            top2 = o; c2 = c;
          }
        }
        if (n > 1 && top1 - top2 < 1e-6) {
          f.crossing_ambiguous = true;
          ambiguous_pairs.emplace_back(c1, c2);
        }
      }

      f.eigenvalues.resize(n);
      f.eigenvectors.resize(n, n);
      for (int j = 0; j < n; ++j) {
        f.eigenvalues(j) = es.eigenvalues()(perm[j]);
        f.eigenvectors.col(j) = es.eigenvectors().col(perm[j]);
        const Complex c = (prev.col(j).adjoint() * f.eigenvectors.col(j))(0);
        if (std::abs(c) > 1e-12) {
          f.eigenvectors.col(j) *= std::conj(c) / std::abs(c);
        }
      }

      // Map raw-column ambiguity pairs into the new ordering.
      if (!ambiguous_pairs.empty()) {
        std::vector<int> where(n, -1);
        for (int j = 0; j < n; ++j) where[perm[j]] = j;
        for (auto& pr : ambiguous_pairs) {
          pr = {where[pr.first], where[pr.second]};
        }
      }
    }

    f.degeneracy_blocks = detail::degeneracy_partition(f.eigenvalues, deg_tol);
    if (!ambiguous_pairs.empty()) {
      UnionFind uf(n);
      for (const auto& block : f.degeneracy_blocks) {
        for (std::size_t k = 1; k < block.size(); ++k) uf.unite(block[0], block[k]);
      }
      for (const auto& [a, b] : ambiguous_pairs) uf.unite(a, b);
      f.degeneracy_blocks = blocks_from_union(uf, n);
    }

    const ComplexMatrix rho_dot = spec.apply_generator(t, rho.matrix());
    f.lambda_dot =
        (f.eigenvectors.adjoint() * rho_dot * f.eigenvectors).diagonal().real();

    validate_frame(f);
    frames.push_back(std::move(f));
  }
  return frames;
}

OmegaGenerator reconstruct_omega(const SpectralFrame& frame,
                                 const ComplexMatrix& rho_dot, double deg_tol,
                                 double leak_tol) {
  const int n = static_cast<int>(frame.eigenvalues.size());
  if (rho_dot.rows() != n || rho_dot.cols() != n) {
    throw DimensionError("reconstruct_omega: rho_dot dimension mismatch");
  }

  const auto blocks = merge_partitions(
      frame.degeneracy_blocks,
      detail::degeneracy_partition(frame.eigenvalues, deg_tol), n);
  std::vector<int> block_of(n, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int idx : blocks[b]) block_of[idx] = static_cast<int>(b);
  }

  const ComplexMatrix m =
      frame.eigenvectors.adjoint() * rho_dot * frame.eigenvectors;

  ComplexMatrix omega_eig = ComplexMatrix::Zero(n, n);
  bool any_block = false;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      if (block_of[j] == block_of[k]) {
        any_block = true;
        if (std::abs(m(j, k)) > leak_tol) {
          std::ostringstream os;
          os << "reconstruct_omega: generator drives degenerate pair (" << j
             << "," << k << ") at t=" << frame.t << " (|coherence rate|="
             << std::abs(m(j, k)) << " > " << leak_tol << ", gap="
             << std::abs(frame.eigenvalues(k) - frame.eigenvalues(j))
             << "); eigenbasis motion not identifiable";
          throw DegeneracyError(os.str());
        }
        continue;  // gauge freedom: pinned to zero
      }
      const double gap = frame.eigenvalues(k) - frame.eigenvalues(j);
      omega_eig(j, k) = Complex(0.0, 1.0) * m(j, k) / gap;
    }
  }

  ComplexMatrix omega =
      frame.eigenvectors * omega_eig * frame.eigenvectors.adjoint();
  HermitianOperator op((std::move(omega)));
  if (op.hermiticity_defect() > 1e-10) {
    std::ostringstream os;
    os << "reconstruct_omega: hermiticity defect " << op.hermiticity_defect()
       << " exceeds 1e-10 at t=" << frame.t;
    throw ValidationError(os.str());
  }
  return OmegaGenerator{std::move(op), OmegaGauge::parallel_transport, any_block};
}

EhrenfestDecomposition ehrenfest_rate(const SpectralFrame& frame,
                                      const OmegaGenerator& omega,
                                      const DensityMatrix& rho,
                                      const HermitianOperator& observable,
                                      const HermitianOperator& observable_rate) {
  const Eigen::Index n = rho.dim();
  if (frame.eigenvalues.size() != n || omega.matrix.dim() != n ||
      observable.dim() != n || observable_rate.dim() != n) {
    throw DimensionError("ehrenfest_rate: dimension mismatch");
  }

  EhrenfestDecomposition d;
  const RealVector obs_diag =
      (frame.eigenvectors.adjoint() * observable.matrix() * frame.eigenvectors)
          .diagonal()
          .real();
  d.thermal_term = frame.lambda_dot.dot(obs_diag);
  d.drive_term = expectation(rho, observable_rate);

  const Complex c = trace_product(
      rho.matrix(), commutator(omega.matrix.matrix(), observable.matrix()));
  // tr(rho [Omega, O]) is purely imaginary for Hermitian arguments.
  if (std::abs(c.real()) > 1e-10) {
    std::ostringstream os;
    os << "ehrenfest_rate: coherence term has real residue " << c.real();
    throw ValidationError(os.str());
  }
  d.coherence_term = -c.imag();  // Re(i * c)

  d.total = d.thermal_term + d.drive_term + d.coherence_term;
  return d;
}

HermitianOperator power_operator(const OmegaGenerator& omega,
                                 const HermitianOperator& h,
                                 const HermitianOperator& h_rate) {
  if (omega.matrix.dim() != h.dim() || h.dim() != h_rate.dim()) {
    throw DimensionError("power_operator: dimension mismatch");
  }
  ComplexMatrix p = h_rate.matrix() +
      Complex(0.0, 1.0) * commutator(omega.matrix.matrix(), h.matrix());
  HermitianOperator op((std::move(p)));
  if (op.hermiticity_defect() > 1e-10) {
    throw ValidationError("power_operator: result not Hermitian within 1e-10");
  }
  return op;
}

double heat_rate(const SpectralFrame& frame, const HermitianOperator& h) {
  if (frame.eigenvalues.size() != h.dim()) {
    throw DimensionError("heat_rate: dimension mismatch");
  }
  const RealVector h_diag =
      (frame.eigenvectors.adjoint() * h.matrix() * frame.eigenvectors)
          .diagonal()
          .real();
  return frame.lambda_dot.dot(h_diag);
}

EntropyRate entropy_and_rate(const SpectralFrame& frame, double lambda_floor) {
  if (!(lambda_floor > 0.0)) {
    throw ValidationError("entropy_and_rate: lambda_floor must be positive");
  }
  EntropyRate out;
  for (Eigen::Index j = 0; j < frame.eigenvalues.size(); ++j) {
    const double lam = frame.eigenvalues(j);
    const double lam_dot = frame.lambda_dot(j);
    if (lam <= 0.0 && lam_dot < -1e-12) {
      std::ostringstream os;
      os << "entropy_and_rate: weight " << j << " is " << lam
         << " with rate " << lam_dot << " at t=" << frame.t
         << " (state leaving the simplex)";
      throw ValidationError(os.str());
    }
    if (lam > 0.0) {
      out.S -= lam * std::log(lam);
    }
    if (lam >= lambda_floor) {
      out.S_dot -= lam_dot * std::log(lam);
    } else if (lam_dot > 0.0) {
      out.S_dot -= lam_dot * std::log(lambda_floor);
    }
  }
  return out;
}

RobertsonCheck robertson_check(const DensityMatrix& rho,
                               const OmegaGenerator& omega,
                               const HermitianOperator& observable) {
  const Complex c = trace_product(
      rho.matrix(), commutator(omega.matrix.matrix(), observable.matrix()));
  RobertsonCheck r;
  r.lhs = std::abs(c);
  r.rhs = 2.0 * std::sqrt(variance(rho, omega.matrix) * variance(rho, observable));
  r.ok = r.lhs <= r.rhs + 1e-9;
  return r;
}

std::vector<ThermoRecord> first_law_audit(const Trajectory& traj,
                                          const DynamicsSpec& spec,
                                          const AuditOptions& options) {
  return first_law_audit(traj, spec, track_spectrum(traj, spec, options.deg_tol),
                         options);
}

std::vector<ThermoRecord> first_law_audit(const Trajectory& traj,
                                          const DynamicsSpec& spec,
                                          const std::vector<SpectralFrame>& frames,
                                          const AuditOptions& options) {
  if (frames.size() != traj.states.size()) {
    throw ValidationError("first_law_audit: frame count does not match trajectory");
  }
  std::vector<ThermoRecord> records;
  records.reserve(frames.size());

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const SpectralFrame& frame = frames[i];
    const DensityMatrix& rho = traj.states[i];
    const double t = traj.times[i];

    const ComplexMatrix rho_dot = liouvillian_apply(spec, t, rho);
    const HermitianOperator h = spec.hamiltonian().value(t);
    const HermitianOperator h_rate = spec.hamiltonian().derivative(t);
    const OmegaGenerator omega =
        reconstruct_omega(frame, rho_dot, options.deg_tol, options.leak_tol);

    ThermoRecord rec;
    rec.t = t;
    rec.E = expectation(rho, h);
    rec.Q_dot = heat_rate(frame, h);
    rec.W_dot = expectation(rho, power_operator(omega, h, h_rate));
    const EntropyRate ent = entropy_and_rate(frame, options.lambda_floor);
    rec.S = ent.S;
    rec.S_dot = ent.S_dot;

    const double dE_dt = trace_product(rho_dot, h.matrix()).real() +
                         trace_product(rho.matrix(), h_rate.matrix()).real();
    rec.first_law_residual = dE_dt - rec.Q_dot - rec.W_dot;
    rec.flagged =
        std::abs(rec.first_law_residual) > options.audit_tol || frame.crossing_ambiguous;

    if (i > 0) {
      const ThermoRecord& prev = records.back();
      const double dt = t - prev.t;
      rec.Q_accum = prev.Q_accum + 0.5 * (rec.Q_dot + prev.Q_dot) * dt;
      rec.W_accum = prev.W_accum + 0.5 * (rec.W_dot + prev.W_dot) * dt;
    }
    records.push_back(rec);
  }
  return records;
}

double observable_rate_fd(const DynamicsSpec& spec, const DensityMatrix& rho,
                          double t, const HermitianOperator& observable,
                          double h) {
  if (!(h > 0.0)) {
    throw ValidationError("observable_rate_fd: step must be positive");
  }
  if (rho.dim() != spec.dim() || observable.dim() != spec.dim()) {
    throw DimensionError("observable_rate_fd: dimension mismatch");
  }
  const ComplexMatrix forward = rk4_step(spec, rho.matrix(), t, h);
  const ComplexMatrix backward = rk4_step(spec, rho.matrix(), t, -h);
  const Complex diff = trace_product(ComplexMatrix(forward - backward),
                                     observable.matrix());
  return diff.real() / (2.0 * h);
}

}  // namespace oqt
