#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/graph.hpp"

namespace spingraph {

/// sigma_e = [[0, e_y + i e_x], [e_y - i e_x, 0]] = e_y sigma_x - e_x sigma_y;
/// traceless Hermitian involution attached to a planar unit direction.
inline Eigen::Matrix2cd rashba_sigma(const Eigen::Vector2d& e) {
  if (std::abs(e.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("rashba_sigma: direction must be a unit vector");
  }
  Eigen::Matrix2cd s;
  s << Complex(0.0, 0.0), Complex(e.y(), e.x()),  //
      Complex(e.y(), -e.x()), Complex(0.0, 0.0);
  return s;
}

/// Two documented holonomy conventions for the per-edge spin rotation.
/// kDisplay: exp(-i 2 k_R L (sigma x n) . e) with (sigma x n).e = -sigma_e,
/// i.e. cos(2 k_R L) I + i sin(2 k_R L) sigma_e.
/// kHamiltonian: exp(-i k_R L sigma_e).  The conventions differ by angle
/// and orientation; the observable lattice physics (band/cage positions,
/// located by scans) does not depend on the choice.
enum class RashbaConvention { kDisplay, kHamiltonian };

inline Eigen::Matrix2cd rashba_edge_rotation(double length, double k_rashba,
                                             const Eigen::Vector2d& e,
                                             RashbaConvention convention =
                                                 RashbaConvention::kDisplay) {
  const Eigen::Matrix2cd sigma = rashba_sigma(e);
  const double angle = convention == RashbaConvention::kDisplay
                           ? 2.0 * k_rashba * length
                           : -k_rashba * length;
  return std::cos(angle) * Eigen::Matrix2cd::Identity() +
         Complex(0.0, std::sin(angle)) * sigma;
}

/// Rashba operator data on a metric graph:
/// H = (i d/dx + A_e + k_R sigma_e)^2 - k_R^2 on every edge, delta-type
/// coupling epsilon(v) at each vertex (explicit Dirichlet markers stand in
/// for epsilon = infinity).
struct RashbaParams {
  double k_rashba = 0.0;
  std::vector<double> edge_potentials;  // A_e per edge index; empty = all 0
  std::vector<double> vertex_coupling;  // epsilon(v) per vertex index; empty = all 0
  std::vector<bool> dirichlet;          // per vertex index; empty = none

  double potential(int e) const {
    return edge_potentials.empty() ? 0.0 : edge_potentials.at(static_cast<std::size_t>(e));
  }
  double coupling(int v) const {
    return vertex_coupling.empty() ? 0.0 : vertex_coupling.at(static_cast<std::size_t>(v));
  }
  bool is_dirichlet(int v) const {
    return dirichlet.empty() ? false : dirichlet.at(static_cast<std::size_t>(v));
  }
};

/// Boundary data of the general edge solution at energy E.  In the
/// kHamiltonian convention the solution is f(x) = exp(+iWx) h(x) with
/// W = A + k_R sigma_e and -h'' = q^2 h, q = sqrt(E + k_R^2); the covariant
/// derivative Df = (d/dx - iW) f then satisfies Df = exp(+iWx) h'.  The
/// kDisplay convention uses exp(-iWx) and Df = (d/dx + iW) f; the two are
/// related by A -> -A, k_R -> -k_R and produce identical spectra.
/// Columns act on the coefficient stack (c+ up, c+ down, c- up, c- down).
struct RashbaEdgeTransfer {
  double q = 0.0;
  Eigen::Matrix2cd rotation;  // exp(sign * i W L), the full endpoint frame
  Eigen::Matrix<Complex, 2, 4> value0, value_l, dvalue0, dvalue_l;
};

inline RashbaEdgeTransfer rashba_edge_transfer(double length, double k_rashba,
                                               double potential,
                                               const Eigen::Vector2d& e, double energy,
                                               RashbaConvention convention =
                                                   RashbaConvention::kDisplay) {
  if (!(length > 0.0)) throw std::invalid_argument("rashba_edge_transfer: length > 0");
  const double q_sq = energy + k_rashba * k_rashba;
  if (!(q_sq > 0.0)) {
    throw std::invalid_argument(
        "rashba_edge_transfer: evanescent regime (E + k_R^2 <= 0) is out of scope");
  }
  RashbaEdgeTransfer out;
  out.q = std::sqrt(q_sq);
  const double sign = convention == RashbaConvention::kDisplay ? -1.0 : 1.0;
  const Eigen::Matrix2cd sigma =
      k_rashba == 0.0 ? Eigen::Matrix2cd::Zero() : rashba_sigma(e).eval();
  const double theta = k_rashba * length;
  out.rotation = std::exp(Complex(0.0, sign * potential * length)) *
                 (std::cos(theta) * Eigen::Matrix2cd::Identity() +
                  Complex(0.0, sign * std::sin(theta)) * sigma);

  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Complex plus = std::exp(Complex(0.0, out.q * length));
  const Complex minus = std::exp(Complex(0.0, -out.q * length));
  const Complex iq(0.0, out.q);
  out.value0.block<2, 2>(0, 0) = id;
  out.value0.block<2, 2>(0, 2) = id;
  out.value_l.block<2, 2>(0, 0) = plus * out.rotation;
  out.value_l.block<2, 2>(0, 2) = minus * out.rotation;
  out.dvalue0.block<2, 2>(0, 0) = iq * id;
  out.dvalue0.block<2, 2>(0, 2) = -iq * id;
  out.dvalue_l.block<2, 2>(0, 0) = iq * plus * out.rotation;
  out.dvalue_l.block<2, 2>(0, 2) = -iq * minus * out.rotation;
  return out;
}

/// Vertex linear system for the Rashba operator.  Unknowns are the four
/// complex coefficients per edge; at an eigenvalue the square matrix M(E)
/// becomes singular.  Rows per vertex: 2(d-1) continuity rows (all end
/// values equal) plus 2 flux rows
///   sum_in Df(L) - sum_out Df(0) = epsilon(v) f(v),
/// normalized by q, or 2d value rows for a Dirichlet-marked vertex.
class RashbaSystem {
 public:
  RashbaSystem(const MetricGraph& g, const RashbaParams& params)
      : graph_(&g), params_(params) {
    if (!params_.edge_potentials.empty() &&
        static_cast<int>(params_.edge_potentials.size()) != g.num_edges()) {
      throw std::invalid_argument("rashba_vertex_system: edge_potentials size mismatch");
    }
    if (!params_.vertex_coupling.empty() &&
        static_cast<int>(params_.vertex_coupling.size()) != g.num_vertices()) {
      throw std::invalid_argument("rashba_vertex_system: vertex_coupling size mismatch");
    }
    if (!params_.dirichlet.empty() &&
        static_cast<int>(params_.dirichlet.size()) != g.num_vertices()) {
      throw std::invalid_argument("rashba_vertex_system: dirichlet marker size mismatch");
    }
    directions_.resize(static_cast<std::size_t>(g.num_edges()), Eigen::Vector2d(0.0, 1.0));
    if (params_.k_rashba != 0.0) {
      if (!g.has_positions()) {
        throw std::invalid_argument(
            "rashba_vertex_system: missing embedding (vertex positions are required "
            "when k_rashba != 0)");
      }
      for (int e = 0; e < g.num_edges(); ++e) {
        directions_[static_cast<std::size_t>(e)] = g.edge_unit(e);
      }
    }
  }

  int dim() const { return 4 * graph_->num_edges(); }

  Eigen::MatrixXcd matrix(double energy) const {
    const MetricGraph& g = *graph_;
    const int n = dim();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);

    std::vector<RashbaEdgeTransfer> transfer;
    transfer.reserve(static_cast<std::size_t>(g.num_edges()));
    for (int e = 0; e < g.num_edges(); ++e) {
      transfer.push_back(rashba_edge_transfer(
          g.edge_length(e), params_.k_rashba, params_.potential(e),
          directions_[static_cast<std::size_t>(e)], energy,
          RashbaConvention::kHamiltonian));
    }
    const double q = transfer.front().q;

    const auto value_map = [&](const MetricGraph::EndRef& ref) {
      return ref.end == 0 ? transfer[static_cast<std::size_t>(ref.edge)].value0
                          : transfer[static_cast<std::size_t>(ref.edge)].value_l;
    };

    int row = 0;
    for (int v = 0; v < g.num_vertices(); ++v) {
      const auto& ends = g.ends_at(v);
      if (params_.is_dirichlet(v)) {
        for (const auto& ref : ends) {
          m.block(row, 4 * ref.edge, 2, 4) = value_map(ref);
          row += 2;
        }
        continue;
      }
      for (std::size_t i = 1; i < ends.size(); ++i) {
        m.block(row, 4 * ends[i].edge, 2, 4) += value_map(ends[i]);
        m.block(row, 4 * ends[0].edge, 2, 4) -= value_map(ends[0]);
        row += 2;
      }
      // Flux row, scaled by 1/q to keep entries O(1):
      // sum_{ends at L} Df(L) - sum_{ends at 0} Df(0) - epsilon(v) f(v) = 0.
      for (const auto& ref : ends) {
        const auto& t = transfer[static_cast<std::size_t>(ref.edge)];
        if (ref.end == 1) {
          m.block(row, 4 * ref.edge, 2, 4) += t.dvalue_l / q;
        } else {
          m.block(row, 4 * ref.edge, 2, 4) -= t.dvalue0 / q;
        }
      }
      const double eps = params_.coupling(v);
      if (eps != 0.0) {
        m.block(row, 4 * ends[0].edge, 2, 4) -= (eps / q) * value_map(ends[0]);
      }
      row += 2;
    }
    if (row != n) throw NumericalError("rashba_vertex_system: row count mismatch");
    return m;
  }

  /// Singular values of M(E), ascending.
  Eigen::VectorXd singular_values(double energy) const {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(matrix(energy));
    return svd.singularValues().reverse();
  }

  double smallest_singular_value(double energy) const {
    return singular_values(energy)[0];
  }

  const MetricGraph& graph() const { return *graph_; }
  const RashbaParams& params() const { return params_; }

 private:
  const MetricGraph* graph_;
  RashbaParams params_;
  std::vector<Eigen::Vector2d> directions_;
};

inline RashbaSystem rashba_vertex_system(const MetricGraph& g, const RashbaParams& params) {
  return RashbaSystem(g, params);
}

struct RashbaSpectrum {
  std::vector<double> energy;
  std::vector<int> multiplicity;
  double e_min = 0.0;
  double e_max = 0.0;
  long long total_levels() const {
    long long n = 0;
    for (int m : multiplicity) n += m;
    return n;
  }
};

struct RashbaScanOptions {
  double grid_step = 0.0;     // step in s = sqrt(E + k_R^2); 0 -> pi / (4 L_total)
  double tol = 1e-10;         // golden-section width in s
  double accept_ratio = 1e-6; // root accepted if sigma_min < ratio * typical sigma
  double cluster_tol = 0.0;   // dedup width in s; 0 -> 1e-6 * pi / L_total
  int threads = 1;
};

namespace detail {

/// Golden-section minimizer for a unimodal bracket.
inline double golden_minimize(const std::function<double(double)>& f, double a,
                              double b, double tol) {
  const double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Eigenvalues of the Rashba operator in (e_min, e_max], found as minima of
/// the smallest singular value of the vertex system, scanned uniformly in
/// s = sqrt(E + k_R^2) and refined by golden section.  Multiplicity is the
/// number of singular values below the acceptance threshold at the root.
inline RashbaSpectrum rashba_spectrum(const MetricGraph& g, const RashbaParams& params,
                                      double e_min, double e_max,
                                      const RashbaScanOptions& options = {}) {
  if (!(e_max > e_min)) throw std::invalid_argument("rashba_spectrum: e_max > e_min");
  const double k2 = params.k_rashba * params.k_rashba;
  if (!(e_min + k2 > 0.0)) {
    throw std::invalid_argument("rashba_spectrum: range must satisfy E + k_R^2 > 0");
  }
  const RashbaSystem system(g, params);
  const double total = g.total_length();
  const double step =
      options.grid_step > 0.0 ? options.grid_step : kPi / (4.0 * total);
  const double s_lo = std::sqrt(e_min + k2);
  const double s_hi = std::sqrt(e_max + k2);
  const int n_grid = std::max(3, static_cast<int>(std::ceil((s_hi - s_lo) / step)) + 1);
  const double h = (s_hi - s_lo) / (n_grid - 1);

  const auto sigma_at = [&](double s) {
    return system.smallest_singular_value(s * s - k2);
  };

  std::vector<double> grid(static_cast<std::size_t>(n_grid));
  std::vector<double> sigma(static_cast<std::size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i) grid[static_cast<std::size_t>(i)] = s_lo + i * h;
  parallel_blocks(n_grid, std::max(1, options.threads) * 4, options.threads,
                  [&](int, int lo, int hi) {
                    for (int i = lo; i < hi; ++i) {
                      sigma[static_cast<std::size_t>(i)] =
                          sigma_at(grid[static_cast<std::size_t>(i)]);
                    }
                  });

  std::vector<double> sorted_sigma = sigma;
  std::sort(sorted_sigma.begin(), sorted_sigma.end());
  const double typical = std::max(sorted_sigma[sorted_sigma.size() / 2], 1e-12);
  const double accept = options.accept_ratio * typical;

  const double cluster =
      options.cluster_tol > 0.0 ? options.cluster_tol : 1e-6 * kPi / total;

  std::vector<std::pair<double, int>> roots;  // (s, multiplicity)
  for (int i = 0; i < n_grid; ++i) {
    const bool left_ok = i == 0 || sigma[static_cast<std::size_t>(i)] <
                                       sigma[static_cast<std::size_t>(i - 1)];
    const bool right_ok = i == n_grid - 1 || sigma[static_cast<std::size_t>(i)] <=
                                                 sigma[static_cast<std::size_t>(i + 1)];
    if (!(left_ok && right_ok)) continue;
    const double a = grid[static_cast<std::size_t>(std::max(0, i - 1))];
    const double b = grid[static_cast<std::size_t>(std::min(n_grid - 1, i + 1))];
    const double s_star = detail::golden_minimize(sigma_at, a, b, options.tol);
    const Eigen::VectorXd sv = system.singular_values(s_star * s_star - k2);
    if (sv[0] > accept) continue;
    int mult = 0;
    while (mult < sv.size() && sv[mult] <= accept) ++mult;
    if (!roots.empty() && std::abs(s_star - roots.back().first) <= cluster) continue;
    roots.emplace_back(s_star, mult);
  }
  std::sort(roots.begin(), roots.end());

  RashbaSpectrum out;
  out.e_min = e_min;
  out.e_max = e_max;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (i > 0 && roots[i].first - roots[i - 1].first <= cluster) continue;
    const double energy = roots[i].first * roots[i].first - k2;
    if (energy <= e_min || energy > e_max + 1e-12) continue;
    out.energy.push_back(energy);
    out.multiplicity.push_back(roots[i].second);
  }
  return out;
}

}  // namespace spingraph
