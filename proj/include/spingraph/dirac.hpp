#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/matching.hpp"
#include "spingraph/su2.hpp"

namespace spingraph {

/// Dispersion factor gamma(k) = (E - m) / k with E = sqrt(k^2 + m^2)
/// (units with hbar = c = 1).  Massless case: gamma = 1 for every k.
inline double dirac_gamma(double k, double mass) {
  if (!(k > 0.0)) throw std::invalid_argument("dirac_gamma: k must be positive");
  if (mass < 0.0) throw std::invalid_argument("dirac_gamma: mass must be >= 0");
  if (mass == 0.0) return 1.0;
  return (std::sqrt(k * k + mass * mass) - mass) / k;
}

/// Vertex transition matrix T = -(A - i gamma B)^{-1} (A + i gamma B),
/// mapping incoming plane-wave spinor pairs to outgoing ones at one vertex.
/// Requires self-adjoint (A, B) and gamma in (0, 1].
inline Eigen::MatrixXcd dirac_vertex_transition(const MatchingConditions& mc,
                                                double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("dirac_vertex_transition: gamma must lie in (0, 1]");
  }
  const Complex i(0.0, 1.0);
  const Eigen::MatrixXcd m_minus = mc.A - i * gamma * mc.B;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m_minus);
  if (!lu.isInvertible()) {
    throw NumericalError("dirac_vertex_transition: A - i gamma B is singular");
  }
  return -lu.solve(mc.A + i * gamma * mc.B);
}

/// Neumann scalar vertex matrix X = (2/d) J - I (J the all-ones matrix).
inline Eigen::MatrixXd neumann_X(int d) {
  if (d < 1) throw std::invalid_argument("neumann_X: degree must be >= 1");
  return (2.0 / d) * Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d);
}

/// Time-reversal symmetric transition U† (X ⊗ I_2) U with U = diag(u_e).
/// X must be unitary symmetric for the result to be a valid vertex
/// transition of a time-reversal invariant operator.
inline Eigen::MatrixXcd tr_symmetric_transition(const Eigen::MatrixXcd& x,
                                                const std::vector<SU2>& us) {
  const int d = static_cast<int>(us.size());
  if (x.rows() != d || x.cols() != d) {
    throw std::invalid_argument("tr_symmetric_transition: X must be d x d");
  }
  if ((x - x.transpose()).norm() > 1e-10 * (1.0 + x.norm())) {
    throw std::invalid_argument("tr_symmetric_transition: X must be symmetric");
  }
  Eigen::MatrixXcd t(2 * d, 2 * d);
  for (int e = 0; e < d; ++e) {
    for (int f = 0; f < d; ++f) {
      t.block<2, 2>(2 * e, 2 * f) = x(e, f) * (us[e].adjoint() * us[f]);
    }
  }
  return t;
}

/// Time-reversal condition for spin-1/2 transitions:
///   T^t = -(I ⊗ J) T (I ⊗ J),   J = [[0, 1], [-1, 0]].
inline bool check_time_reversal(const Eigen::MatrixXcd& t, double tol = 1e-10) {
  const auto n = t.rows();
  if (n % 2 != 0 || t.cols() != n) {
    throw std::invalid_argument("check_time_reversal: need a square matrix of even size");
  }
  const int d = static_cast<int>(n / 2);
  Eigen::MatrixXcd ij = Eigen::MatrixXcd::Zero(n, n);
  for (int e = 0; e < d; ++e) ij.block<2, 2>(2 * e, 2 * e) = symplectic_unit();
  const Eigen::MatrixXcd rhs = -ij * t * ij;
  return (t.transpose() - rhs).norm() <= tol * (1.0 + t.norm());
}

}  // namespace spingraph
