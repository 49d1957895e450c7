#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oqt/bloch.hpp"
#include "oqt/random.hpp"
#include "oqt/types.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace oqt;

TEST_CASE("bloch round trip") {
  const Vec3 b(0.3, -0.4, 0.5);
  const DensityMatrix rho = from_bloch(b);
  const BlochState back = to_bloch(rho);
  CHECK((back.B - b).norm() < 1e-14);

  CHECK_THROWS_AS(from_bloch(Vec3(0.9, 0.9, 0.9)), ValidationError);  // |B| > 1
  CHECK_THROWS_AS(BlochState{Vec3(std::nan(""), 0, 0)}, ValidationError);
}

TEST_CASE("field vector round trip and sign convention") {
  const Vec3 v(0.2, -0.7, 1.1);
  const HermitianOperator h = from_field_vector(v);
  CHECK((to_field_vector(h) - v).norm() < 1e-14);
  // H = -v.sigma means v = +z for H = -sigma_z
  CHECK((to_field_vector(HermitianOperator(ComplexMatrix(-pauli_z()))) -
         Vec3(0, 0, 1))
            .norm() < 1e-14);
}

TEST_CASE("coherence triple product: orthogonal frame saturates at 2") {
  CHECK(coherence_rate_triple(Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)) ==
        doctest::Approx(2.0).epsilon(1e-14));
  // coplanar configurations contribute nothing
  CHECK(coherence_rate_triple(Vec3(1, 0, 0), Vec3(0.5, 0, -2), Vec3(1, 0, 1)) ==
        doctest::Approx(0.0));
}

TEST_CASE("torque and power") {
  const Vec3 b(0.6, 0.0, 0.3);
  const Vec3 v(0.0, 0.0, 1.0);
  CHECK((torque(b, v) - Vec3(0.0, -0.6, 0.0)).norm() < 1e-14);

  // omega_vec = -2w; power = 2 w . (B x v)
  const Vec3 w(0.0, 0.5, 0.0);
  CHECK(qubit_power(b, v, Vec3(-2.0 * w)) ==
        doctest::Approx(2.0 * w.dot(b.cross(v))).epsilon(1e-13));
}

TEST_CASE("qubit heat rate: radial shrink against the field") {
  // B along z shrinking: dB/dt = -0.2 z, v = z => Q_dot = 0.2 * |v| * sign
  const Vec3 b(0.0, 0.0, 0.5);
  const Vec3 b_dot(0.0, 0.0, -0.2);
  const Vec3 v(0.0, 0.0, 1.0);
  CHECK(qubit_heat_rate(b, b_dot, v) == doctest::Approx(0.2).epsilon(1e-14));
  // purely tangential motion carries no heat
  CHECK(qubit_heat_rate(Vec3(0.5, 0, 0), Vec3(0, 0.3, 0), v) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(qubit_heat_rate(Vec3(0, 0, 0), b_dot, v), ValidationError);
}

TEST_CASE("dephasing trajectory endpoints") {
  const double bx = std::sqrt(0.75), bz = 0.5, eps = 1.0, gamma = 0.5;
  const Vec3 b0 = dephasing_trajectory(bx, bz, eps, gamma, 0.0);
  CHECK((b0 - Vec3(bx, 0.0, bz)).norm() < 1e-14);

  const Vec3 blate = dephasing_trajectory(bx, bz, eps, gamma, 80.0);
  CHECK(std::hypot(blate.x(), blate.y()) < 1e-15);
  CHECK(blate.z() == doctest::Approx(bz));

  // Gamma = 0: pure precession, |B| conserved
  const Vec3 bfree = dephasing_trajectory(bx, bz, eps, 0.0, 3.7);
  CHECK(bfree.norm() == doctest::Approx(std::hypot(bx, bz)).epsilon(1e-13));
}

TEST_CASE("dephasing trajectory rate matches a centered difference") {
  const double bx = 0.7, bz = -0.4, eps = 1.3, gamma = 0.25, t = 1.1;
  const double h = 1e-6;
  const Vec3 fd = (dephasing_trajectory(bx, bz, eps, gamma, t + h) -
                   dephasing_trajectory(bx, bz, eps, gamma, t - h)) /
                  (2.0 * h);
  const Vec3 rate = dephasing_trajectory_rate(bx, bz, eps, gamma, t);
  CHECK((rate - fd).norm() < 1e-8);
}

TEST_CASE("dephasing heat closed form: frozen value and quadrature") {
  const double eps = 1.0, gamma = 0.5;
  const double bz = 0.5, b0 = 1.0;
  const double bx = std::sqrt(b0 * b0 - bz * bz);

  const double q = dephasing_heat_closed_form(b0, bz, eps);
  CHECK(q == doctest::Approx(oracles::dephasing_heat_bz_half).epsilon(1e-15));
  CHECK(q == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));

  // independent check: integrate -d|B|/dt (Bhat.v) along the trajectory
  const auto q_dot = [&](double t) {
    const Vec3 b = dephasing_trajectory(bx, bz, eps, gamma, t);
    const Vec3 b_dot = dephasing_trajectory_rate(bx, bz, eps, gamma, t);
    return qubit_heat_rate(b, b_dot, Vec3(0.0, 0.0, eps));
  };
  const double q_num = oracles::simpson(q_dot, 0.0, 60.0, 20000);
  CHECK(q_num == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("dephasing heat closed form edge cases") {
  CHECK(dephasing_heat_closed_form(1.0, 0.0, 2.0) == 0.0);
  // negative B_z flips the sign: Q = -eps*Bz*ln(|Bz|/|B0|)
  CHECK(dephasing_heat_closed_form(1.0, -0.5, 1.0) ==
        doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-14));
  // |B_z| = |B0|: transverse part is zero, nothing dephases
  CHECK(dephasing_heat_closed_form(0.5, 0.5, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(dephasing_heat_closed_form(0.5, 0.8, 1.0), ValidationError);
  CHECK_THROWS_AS(dephasing_heat_closed_form(0.0, 0.0, 1.0), ValidationError);
}

TEST_CASE("minimal angular velocity reproduces plane rotation") {
  // B rotating in the xy plane at rate 2: dB/dt = 2 z x B
  const Vec3 b(0.4, 0.1, 0.0);
  const Vec3 omega(0.0, 0.0, 2.0);
  const Vec3 b_dot = omega.cross(b);
  CHECK((minimal_angular_velocity(b, b_dot) - omega).norm() < 1e-13);
  // radial motion needs no rotation
  CHECK(minimal_angular_velocity(Vec3(0.3, 0, 0.4), Vec3(0.15, 0, 0.2)).norm() <
        1e-14);
}

TEST_CASE("power via torque agrees with the triple product form") {
  for (int trial = 0; trial < 1000; ++trial) {
    std::mt19937_64 rng(mix_seed(99, trial));
    const Vec3 b = random_in_ball(rng);
    const Vec3 v = 2.0 * random_in_ball(rng);
    const Vec3 w = 2.0 * random_in_ball(rng);
    const double p = qubit_power(b, v, Vec3(-2.0 * w));  // asserts internally
    CHECK(p == doctest::Approx(coherence_rate_triple(b, v, w)).epsilon(1e-10));
  }
}

TEST_CASE("heat rate is insensitive to the free precession sign") {
  const double bx = 0.6, bz = 0.35, eps = 0.8, gamma = 0.4, t = 0.9;
  const Vec3 v(0, 0, eps);
  const auto rate_for = [&](double lambda) {
    const Vec3 b = dephasing_trajectory(bx, bz, eps, gamma, t, lambda);
    const Vec3 b_dot = dephasing_trajectory_rate(bx, bz, eps, gamma, t, lambda);
    return qubit_heat_rate(b, b_dot, v);
  };
  CHECK(rate_for(2.0 * eps) == doctest::Approx(rate_for(-2.0 * eps)).epsilon(1e-13));
}
