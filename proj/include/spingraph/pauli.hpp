#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/matching.hpp"
#include "spingraph/su2.hpp"

namespace spingraph {

/// Edge-constant Zeeman data: B.sigma = |B| u sigma_3 u†.  The frame u sends
/// the field direction to the z axis; for B = 0 the frame is the identity.
struct PauliChannel {
  SU2 frame = SU2::Identity();
  double magnitude = 0.0;
};

inline PauliChannel pauli_diagonalize_field(const Eigen::Vector3d& b) {
  PauliChannel ch;
  ch.magnitude = b.norm();
  if (ch.magnitude < 1e-300) {
    ch.magnitude = 0.0;
    return ch;
  }
  const Eigen::Vector3d n = b / ch.magnitude;
  // Half-angle construction of the rotation taking z to n.
  const double c = std::sqrt(std::max(0.0, (1.0 + n.z()) / 2.0));
  if (c < 1e-12) {  // n = -z: pick u = [[0,-1],[1,0]]
    ch.frame << 0.0, -1.0, 1.0, 0.0;
    return ch;
  }
  const Complex phase(n.x() / (2.0 * c), n.y() / (2.0 * c));
  ch.frame << Complex(c, 0.0), -std::conj(phase), phase, Complex(c, 0.0);
  return ch;
}

/// Channel wavenumbers of an edge with field magnitude beta at spectral
/// parameter lambda: k_1 = sqrt(lambda - beta) (aligned channel),
/// k_2 = sqrt(lambda + beta).  Requires lambda > beta: all channels open.
inline std::array<double, 2> pauli_channel_wavenumbers(double lambda, double beta) {
  if (beta < 0.0) throw std::invalid_argument("pauli_channel_wavenumbers: beta >= 0");
  if (!(lambda > beta)) {
    throw std::invalid_argument(
        "pauli_channel_wavenumbers: lambda must exceed the field magnitude");
  }
  return {std::sqrt(lambda - beta), std::sqrt(lambda + beta)};
}

/// Pauli vertex transition in rotated-frame form:
///   T = -U^{-1} (A - i K B)^{-1} (A + i K B) U,
/// with U block diagonal over the edge eigenframes and K the diagonal of
/// per-channel wavenumbers.  Unitarity holds when the channel structure is
/// consistent with current conservation (spin-degenerate K, or B = 0);
/// callers in other regimes should prefer the plane-wave assembly below.
inline Eigen::MatrixXcd pauli_vertex_transition(const MatchingConditions& mc,
                                                const Eigen::MatrixXcd& u_block,
                                                const Eigen::VectorXd& k_diag) {
  const int n = mc.dim();
  if (u_block.rows() != n || u_block.cols() != n || k_diag.size() != n) {
    throw std::invalid_argument("pauli_vertex_transition: dimension mismatch");
  }
  if ((k_diag.array() <= 0.0).any()) {
    throw std::invalid_argument("pauli_vertex_transition: wavenumbers must be positive");
  }
  const Complex i(0.0, 1.0);
  const Eigen::MatrixXcd kb = k_diag.asDiagonal() * mc.B;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(mc.A - i * kb);
  if (!lu.isInvertible()) {
    throw NumericalError("pauli_vertex_transition: singular boundary system");
  }
  const Eigen::MatrixXcd core = -lu.solve(mc.A + i * kb);
  Eigen::FullPivLU<Eigen::MatrixXcd> ulu(u_block);
  if (!ulu.isInvertible()) {
    throw std::invalid_argument("pauli_vertex_transition: frame matrix not invertible");
  }
  return ulu.solve(core * u_block);
}

/// Pauli vertex transition at spectral parameter lambda from the plane-wave
/// substitution.  Boundary data uses the edge eigenframes: with U = diag(u_e)
/// and K = diag(k_1^e, k_2^e),
///   psi  = U (mu_out + mu_in),   psi' = i U K (mu_out - mu_in),
/// so A psi + B psi' = 0 yields
///   T = -(A U - i B U K)^{-1} (A U + i B U K),
/// which reduces to -(A - ikB)^{-1}(A + ikB) when all fields vanish.
inline Eigen::MatrixXcd pauli_planewave_transition(const MatchingConditions& mc,
                                                   const std::vector<PauliChannel>& ends,
                                                   double lambda) {
  const int d = static_cast<int>(ends.size());
  if (mc.dim() != 2 * d) {
    throw std::invalid_argument("pauli_vertex_transition: dimension mismatch");
  }
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  Eigen::VectorXd k(2 * d);
  for (int e = 0; e < d; ++e) {
    u.block<2, 2>(2 * e, 2 * e) = ends[e].frame;
    const auto kk = pauli_channel_wavenumbers(lambda, ends[e].magnitude);
    k(2 * e) = kk[0];
    k(2 * e + 1) = kk[1];
  }
  const Complex i(0.0, 1.0);
  const Eigen::MatrixXcd au = mc.A * u;
  const Eigen::MatrixXcd buk = mc.B * u * k.asDiagonal();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(au - i * buk);
  if (!lu.isInvertible()) {
    throw NumericalError("pauli_planewave_transition: singular boundary system");
  }
  return -lu.solve(au + i * buk);
}

/// Flux-normalized transition K^{1/2} T K^{-1/2}; unitary for self-adjoint
/// conditions (current conservation).  This is the form entering the bond
/// scattering matrix in the lambda scan.
inline Eigen::MatrixXcd pauli_vertex_transition_normalized(
    const MatchingConditions& mc, const std::vector<PauliChannel>& ends,
    double lambda) {
  const int d = static_cast<int>(ends.size());
  Eigen::VectorXd khalf(2 * d);
  for (int e = 0; e < d; ++e) {
    const auto kk = pauli_channel_wavenumbers(lambda, ends[e].magnitude);
    khalf(2 * e) = std::sqrt(kk[0]);
    khalf(2 * e + 1) = std::sqrt(kk[1]);
  }
  const Eigen::MatrixXcd t = pauli_planewave_transition(mc, ends, lambda);
  return khalf.asDiagonal() * t * khalf.cwiseInverse().asDiagonal();
}

}  // namespace spingraph
