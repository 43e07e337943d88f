#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spingraph/core.hpp"
#include "spingraph/rng.hpp"

namespace spingraph {

/// 2x2 unitary with unit determinant.  The alias documents intent; validity
/// is checked where it matters via is_su2().
using SU2 = Eigen::Matrix2cd;

/// Map a unit quaternion (a, b, c, d) to SU(2):
///   [[ a+ib,  c+id ],
///    [ -c+id, a-ib ]]
/// The input is normalized first, so any nonzero 4-vector is accepted.
inline SU2 su2_from_quaternion(double a, double b, double c, double d) {
  const double n = std::sqrt(a * a + b * b + c * c + d * d);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("su2_from_quaternion: vector must be nonzero and finite");
  }
  a /= n;
  b /= n;
  c /= n;
  d /= n;
  SU2 u;
  u << Complex(a, b), Complex(c, d), Complex(-c, d), Complex(a, -b);
  return u;
}

inline bool is_su2(const Eigen::Matrix2cd& u, double tol = 1e-12) {
  const double unitary = (u.adjoint() * u - Eigen::Matrix2cd::Identity()).norm();
  const Complex det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  return unitary <= tol && std::abs(det - Complex(1.0, 0.0)) <= tol;
}

/// Haar-distributed SU(2) element: four standard normals normalized to the
/// unit 3-sphere, then mapped through su2_from_quaternion.
inline SU2 haar_su2(SplitMix64& rng) {
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& x : q) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (!(n2 > 1e-24));
  return su2_from_quaternion(q[0], q[1], q[2], q[3]);
}

/// The symplectic unit J = [[0, 1], [-1, 0]]; satisfies J^2 = -I and
/// J u J^{-1} = conj(u) for u in SU(2).
inline const Eigen::Matrix2cd& symplectic_unit() {
  static const Eigen::Matrix2cd j = [] {
    Eigen::Matrix2cd m;
    m << 0.0, 1.0, -1.0, 0.0;
    return m;
  }();
  return j;
}

/// CDF of tr(u)/2 under Haar measure: the semicircle law (2/pi) sqrt(1-x^2).
inline double semicircle_cdf(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 0.5 + (x * std::sqrt(1.0 - x * x) + std::asin(x)) / 3.141592653589793238462643383280;
}

}  // namespace spingraph
