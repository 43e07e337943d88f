// Dirac vertex transitions: dispersion factor, unitarity, time reversal, and
// the block structure of symmetric transitions.

#include "test_support.hpp"

using namespace spingraph;
using namespace testsup;

TEST_CASE("dirac_gamma dispersion factor") {
  REQUIRE(dirac_gamma(0.3, 0.0) == 1.0);
  REQUIRE(dirac_gamma(1e6, 0.0) == 1.0);
  // 3-4-5 triple: gamma = (5 - 4) / 3.
  REQUIRE(dirac_gamma(3.0, 4.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  // monotone in k, approaching 1 from below
  double prev = 0.0;
  for (double k : {0.5, 1.0, 2.0, 8.0, 64.0}) {
    const double g = dirac_gamma(k, 1.0);
    REQUIRE(g > prev);
    REQUIRE(g < 1.0);
    prev = g;
  }
  REQUIRE(dirac_gamma(1e9, 1.0) == Catch::Approx(1.0).epsilon(1e-8));
  REQUIRE_THROWS_AS(dirac_gamma(0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(dirac_gamma(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("neumann_X is the symmetric unitary involution (2/d)J - I") {
  Eigen::MatrixXd x2(2, 2);
  x2 << 0.0, 1.0, 1.0, 0.0;
  REQUIRE((neumann_X(2) - x2).norm() < 1e-15);
  for (int d : {1, 2, 3, 4, 5}) {
    const Eigen::MatrixXd x = neumann_X(d);
    REQUIRE((x * x - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-13);
    REQUIRE((x - x.transpose()).norm() == 0.0);
    // constant vector is fixed: X 1 = 1
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d);
    REQUIRE((x * ones - ones).norm() < 1e-13);
    if (d > 1) {
      REQUIRE(x(0, 0) == Catch::Approx(2.0 / d - 1.0));
      REQUIRE(x(0, 1) == Catch::Approx(2.0 / d));
    }
  }
}

TEST_CASE("vertex transitions are unitary for valid conditions and any gamma") {
  SplitMix64 rng(1001);
  for (int d : {1, 2, 3, 4}) {
    for (int rep = 0; rep < 10; ++rep) {
      const MatchingConditions mc = random_valid_conditions(d, rng);
      for (double gamma : {1.0, 0.37, 0.05}) {
        const Eigen::MatrixXcd t = dirac_vertex_transition(mc, gamma);
        REQUIRE(unitary_defect(t) < 1e-9);
      }
    }
  }
}

TEST_CASE("gamma outside (0, 1] is rejected") {
  const MatchingConditions mc = dirichlet_conditions(1);
  REQUIRE_THROWS_AS(dirac_vertex_transition(mc, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(dirac_vertex_transition(mc, 1.5), std::invalid_argument);
}

TEST_CASE("dirichlet transition is -I for every gamma") {
  for (int d : {1, 3}) {
    const MatchingConditions mc = dirichlet_conditions(d);
    for (double gamma : {1.0, 0.2}) {
      const Eigen::MatrixXcd t = dirac_vertex_transition(mc, gamma);
      REQUIRE(max_abs_diff(t, -Eigen::MatrixXcd::Identity(2 * d, 2 * d)) < 1e-14);
    }
  }
}

TEST_CASE("neumann-like transitions equal the rotated X form, gamma-independent") {
  SplitMix64 rng(555);
  for (int d : {1, 2, 3, 4}) {
    const auto us = random_su2s(d, rng);
    const MatchingConditions mc = neumann_like_conditions(us);
    const Eigen::MatrixXcd expected =
        tr_symmetric_transition(neumann_X(d).cast<Complex>(), us);
    for (double gamma : {1.0, 0.5, 0.25}) {
      const Eigen::MatrixXcd t = dirac_vertex_transition(mc, gamma);
      REQUIRE(max_abs_diff(t, expected) < 1e-12);
    }
  }
}

TEST_CASE("tr_symmetric_transition assembles the documented blocks") {
  SplitMix64 rng(77);
  const int d = 3;
  const auto us = random_su2s(d, rng);
  const Eigen::MatrixXcd x = random_symmetric_unitary(d, rng);
  const Eigen::MatrixXcd t = tr_symmetric_transition(x, us);
  REQUIRE(unitary_defect(t) < 1e-12);
  for (int e = 0; e < d; ++e) {
    for (int f = 0; f < d; ++f) {
      const Eigen::Matrix2cd block = t.block<2, 2>(2 * e, 2 * f);
      const Eigen::Matrix2cd expected = x(e, f) * (us[e].adjoint() * us[f]);
      REQUIRE(max_abs_diff(block, expected) < 1e-13);
    }
  }
  // a nonsymmetric X is rejected
  Eigen::MatrixXcd bad = x;
  bad(0, 1) += 0.1;
  REQUIRE_THROWS_AS(tr_symmetric_transition(bad, us), std::invalid_argument);
}

TEST_CASE("symmetric transitions satisfy the time-reversal condition") {
  SplitMix64 rng(303);
  for (int d : {2, 3, 4}) {
    const auto us = random_su2s(d, rng);
    const Eigen::MatrixXcd x = random_symmetric_unitary(d, rng);
    REQUIRE(check_time_reversal(tr_symmetric_transition(x, us)));
    // Neumann conditions with rotations are a special case.
    const Eigen::MatrixXcd t =
        dirac_vertex_transition(neumann_like_conditions(us), 1.0);
    REQUIRE(check_time_reversal(t, 1e-9));
  }
}

TEST_CASE("X tensor sigma_z is unitary but breaks time reversal") {
  const Eigen::MatrixXd x = neumann_X(3);
  Eigen::Matrix2cd sz;
  sz << 1.0, 0.0, 0.0, -1.0;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(6, 6);
  for (int e = 0; e < 3; ++e) {
    for (int f = 0; f < 3; ++f) t.block<2, 2>(2 * e, 2 * f) = x(e, f) * sz;
  }
  REQUIRE(unitary_defect(t) < 1e-13);
  REQUIRE_FALSE(check_time_reversal(t));
}

TEST_CASE("time-reversal blocks pair up as T(fe) T(ef) = det(T(ef)) I") {
  SplitMix64 rng(909);
  for (int d : {2, 3}) {
    const auto us = random_su2s(d, rng);
    const Eigen::MatrixXcd x = random_symmetric_unitary(d, rng);
    const Eigen::MatrixXcd t = tr_symmetric_transition(x, us);
    for (int e = 0; e < d; ++e) {
      for (int f = 0; f < d; ++f) {
        const Eigen::Matrix2cd ef = t.block<2, 2>(2 * e, 2 * f);
        const Eigen::Matrix2cd fe = t.block<2, 2>(2 * f, 2 * e);
        const Eigen::Matrix2cd lhs = fe * ef;
        const Eigen::Matrix2cd rhs = ef.determinant() * Eigen::Matrix2cd::Identity();
        REQUIRE(max_abs_diff(lhs, rhs) < 1e-12);
      }
    }
  }
}

TEST_CASE("check_time_reversal validates shape") {
  REQUIRE_THROWS_AS(check_time_reversal(Eigen::MatrixXcd::Identity(3, 3)),
                    std::invalid_argument);
}
