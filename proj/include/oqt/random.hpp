#pragma once

// Seeded generators for randomized property suites.  Deterministic for a
// given seed on a given platform.

#include "oqt/types.hpp"

#include <random>

namespace oqt {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed ^ stream index
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline ComplexMatrix ginibre(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = Complex(normal(rng), normal(rng));
    }
  }
  return g;
}

inline HermitianOperator random_hermitian(Eigen::Index n, std::mt19937_64& rng,
                                          double scale = 1.0) {
  const ComplexMatrix g = ginibre(n, rng);
  return HermitianOperator(ComplexMatrix(0.5 * scale * (g + g.adjoint())));
}

inline DensityMatrix random_density(Eigen::Index n, std::mt19937_64& rng) {
  const ComplexMatrix g = ginibre(n, rng);
  ComplexMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(std::move(m));
}

inline ComplexMatrix random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  const ComplexMatrix g = ginibre(n, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline Vec3 random_unit3(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 v(normal(rng), normal(rng), normal(rng));
  while (v.norm() < 1e-6) {
    v = Vec3(normal(rng), normal(rng), normal(rng));
  }
  return v.normalized();
}

inline Vec3 random_in_ball(std::mt19937_64& rng, double radius = 1.0) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return radius * std::cbrt(unif(rng)) * random_unit3(rng);
}

}  // namespace oqt
