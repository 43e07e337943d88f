#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/su2.hpp"

namespace spingraph {

/// Local vertex matching conditions A psi + B psi' = 0, where psi stacks the
/// two spin components of every incident edge end (ends ordered as in
/// MetricGraph::ends_at) and psi' stacks the conjugate boundary data.  Both
/// matrices are square of size 2 d_v.
struct MatchingConditions {
  Eigen::MatrixXcd A;
  Eigen::MatrixXcd B;

  int dim() const { return static_cast<int>(A.rows()); }
};

struct SelfAdjointReport {
  bool full_rank = false;
  bool hermitian = false;
  double rank_ratio = 0.0;     // sigma_min / sigma_max of (A B)
  double herm_residual = 0.0;  // ||A B† − B A†||_F
  bool ok() const { return full_rank && hermitian; }
};

/// Self-adjointness of the conditions: (A B) has maximal rank and A B† is
/// Hermitian.  Rank is decided by SVD with relative threshold kRankTol;
/// hermiticity up to kHermitianTol * (1 + ||A|| ||B||).
inline SelfAdjointReport check_self_adjoint(const MatchingConditions& mc) {
  const auto n = mc.A.rows();
  if (mc.A.cols() != n || mc.B.rows() != n || mc.B.cols() != n) {
    throw std::invalid_argument("check_self_adjoint: A and B must be square and equal-sized");
  }
  SelfAdjointReport rep;
  Eigen::MatrixXcd ab(n, 2 * n);
  ab << mc.A, mc.B;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ab);
  const auto& sv = svd.singularValues();
  rep.rank_ratio = sv(sv.size() - 1) / sv(0);
  rep.full_rank = sv(0) > 0.0 && rep.rank_ratio > kRankTol;
  const Eigen::MatrixXcd h = mc.A * mc.B.adjoint();
  rep.herm_residual = (h - h.adjoint()).norm();
  rep.hermitian =
      rep.herm_residual <= kHermitianTol * (1.0 + mc.A.norm() * mc.B.norm());
  return rep;
}

/// Dirichlet conditions at a vertex of degree d: psi = 0.
inline MatchingConditions dirichlet_conditions(int d) {
  if (d < 1) throw std::invalid_argument("dirichlet_conditions: degree must be >= 1");
  MatchingConditions mc;
  mc.A = Eigen::MatrixXcd::Identity(2 * d, 2 * d);
  mc.B = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  return mc;
}

/// Neumann-like conditions with one SU(2) rotation per incident edge end:
/// the rotated upper components agree across ends and the rotated lower
/// components sum to zero.  With U = diag(u_1, ..., u_d),
///   A = (D ⊗ I_2) U,  B = (S ⊗ I_2) U,
/// where D holds the d-1 difference rows (and a zero row) and S is zero
/// except for an all-ones last row.
inline MatchingConditions neumann_like_conditions(const std::vector<SU2>& us) {
  const int d = static_cast<int>(us.size());
  if (d < 1) throw std::invalid_argument("neumann_like_conditions: need at least one end");
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) {
    diff(i, i) = 1.0;
    diff(i, i + 1) = -1.0;
  }
  for (int j = 0; j < d; ++j) sum(d - 1, j) = 1.0;

  Eigen::MatrixXcd u_block = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    if (!is_su2(us[i], 1e-10)) {
      throw std::invalid_argument("neumann_like_conditions: rotation is not in SU(2)");
    }
    u_block.block<2, 2>(2 * i, 2 * i) = us[i];
  }

  MatchingConditions mc;
  mc.A = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  mc.B = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      mc.A.block<2, 2>(2 * i, 2 * j) = diff(i, j) * Eigen::Matrix2cd::Identity();
      mc.B.block<2, 2>(2 * i, 2 * j) = sum(i, j) * Eigen::Matrix2cd::Identity();
    }
  }
  mc.A = mc.A * u_block;
  mc.B = mc.B * u_block;
  return mc;
}

}  // namespace spingraph
