#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/graph.hpp"
#include "spingraph/rashba.hpp"

namespace spingraph {

/// Chain of M rhombi ("diamonds") embedded in the plane with all edges of
/// equal nominal length at +-45 degrees.  Vertices: spine s_0..s_M on the
/// x-axis (valency 4 in the interior, 2 at the boundary), one top and one
/// bottom vertex per cell (valency 2).  Cell c contributes four edges
///   4c:   s_c -> t_c     4c+1: t_c -> s_{c+1}
///   4c+2: s_c -> b_c     4c+3: b_c -> s_{c+1}
/// The two boundary spine vertices are the lead attachment ports.
struct DiamondChain {
  MetricGraph graph;
  int cells = 0;
  double edge_length = 0.0;  // nominal L
  int left_vertex = 0;       // index of s_0
  int right_vertex = 0;      // index of s_M
};

/// Optional per-edge length overrides (size 4M) support perturbation studies;
/// the embedding (and hence the +-45 degree spin-orbit directions) stays on
/// the unperturbed square geometry.
inline DiamondChain build_diamond_chain(int cells, double length,
                                        const std::vector<double>& length_overrides = {}) {
  if (cells < 1) throw std::invalid_argument("build_diamond_chain: need cells >= 1");
  if (!(length > 0.0)) throw std::invalid_argument("build_diamond_chain: need length > 0");
  if (!length_overrides.empty() &&
      static_cast<int>(length_overrides.size()) != 4 * cells) {
    throw std::invalid_argument("build_diamond_chain: need 4*cells length overrides");
  }
  const double dx = length * std::sqrt(2.0);
  const double dy = length / std::sqrt(2.0);
  std::vector<VertexSpec> vertices;
  for (int j = 0; j <= cells; ++j) {
    vertices.push_back({j, {{j * dx, 0.0}}});
  }
  for (int c = 0; c < cells; ++c) {
    vertices.push_back({cells + 1 + c, {{(c + 0.5) * dx, dy}}});
  }
  for (int c = 0; c < cells; ++c) {
    vertices.push_back({2 * cells + 1 + c, {{(c + 0.5) * dx, -dy}}});
  }
  std::vector<EdgeSpec> edges;
  const auto edge_len = [&](int id) {
    return length_overrides.empty() ? length
                                    : length_overrides[static_cast<std::size_t>(id)];
  };
  for (int c = 0; c < cells; ++c) {
    const int top = cells + 1 + c;
    const int bottom = 2 * cells + 1 + c;
    edges.push_back({4 * c + 0, c, top, edge_len(4 * c + 0)});
    edges.push_back({4 * c + 1, top, c + 1, edge_len(4 * c + 1)});
    edges.push_back({4 * c + 2, c, bottom, edge_len(4 * c + 2)});
    edges.push_back({4 * c + 3, bottom, c + 1, edge_len(4 * c + 3)});
  }
  DiamondChain chain{MetricGraph(std::move(vertices), std::move(edges)), cells, length, 0, 0};
  chain.left_vertex = chain.graph.vertex_index(0);
  chain.right_vertex = chain.graph.vertex_index(cells);
  return chain;
}

/// Constant edge potentials realizing a magnetic flux through every rhombus:
/// the flux is gauged onto the two upper edges of each cell so that the line
/// integral around the cell equals `flux` exactly, including under length
/// perturbations.
inline std::vector<double> diamond_flux_potentials(const DiamondChain& chain, double flux) {
  std::vector<double> a(static_cast<std::size_t>(chain.graph.num_edges()), 0.0);
  for (int c = 0; c < chain.cells; ++c) {
    const double top_length = chain.graph.edge_length(4 * c) +
                              chain.graph.edge_length(4 * c + 1);
    a[static_cast<std::size_t>(4 * c)] = flux / top_length;
    a[static_cast<std::size_t>(4 * c + 1)] = flux / top_length;
  }
  return a;
}

struct TransmissionResult {
  double total = 0.0;           // G, summed over the two incoming spin channels
  Eigen::Matrix2cd t;           // column j: transmitted spinor for incoming channel j
  Eigen::Matrix2cd r;           // column j: reflected spinor for incoming channel j
  double unitarity_deficit = 0.0;
};

namespace detail {

/// Flux-normalized delta-type vertex scattering with per-attachment
/// wavenumbers q_i > 0 and coupling eps:
///   S[i,j] = 2i sqrt(q_i q_j) / (i sum_q - eps) - delta_ij.
/// Unitary for real eps; reduces to the Householder form 2 sqrt(q_i q_j)/sum_q
/// - delta for eps = 0 and to -(identity) in the Dirichlet limit.
inline Eigen::MatrixXcd delta_vertex_scattering(const std::vector<double>& q, double eps) {
  const int d = static_cast<int>(q.size());
  double sum_q = 0.0;
  for (double qi : q) sum_q += qi;
  const Complex c = Complex(0.0, 2.0) / Complex(-eps, sum_q);
  Eigen::MatrixXcd s(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      s(i, j) = c * std::sqrt(q[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(j)]);
    }
    s(i, i) -= 1.0;
  }
  return s;
}

}  // namespace detail

/// Two-lead scattering through a finite graph carrying a Rashba operator.
/// The leads are semi-infinite free edges (wavenumber k, two spin channels)
/// attached at the given vertices; interior edges propagate with
/// q = sqrt(k^2 + k_R^2), a spin rotation, and the edge-potential phase.
/// Solves (I - S_int) a = source in flux-normalized bond amplitudes, checks
/// per-channel unitarity to 1e-8, and retries once at k + 1e-9 when the
/// interior system is resonant.
inline TransmissionResult transmission(const MetricGraph& g, const RashbaParams& params,
                                       int lead_in, int lead_out, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("transmission: need k > 0");
  if (lead_in < 0 || lead_in >= g.num_vertices() || lead_out < 0 ||
      lead_out >= g.num_vertices() || lead_in == lead_out) {
    throw std::invalid_argument("transmission: invalid lead vertices");
  }
  if (params.is_dirichlet(lead_in) || params.is_dirichlet(lead_out)) {
    throw std::invalid_argument("transmission: lead vertex cannot be Dirichlet");
  }
  if (params.k_rashba != 0.0 && !g.has_positions()) {
    throw std::invalid_argument(
        "transmission: missing embedding (vertex positions are required when "
        "k_rashba != 0)");
  }

  const auto solve_at = [&](double k_eval) {
    const double q_int = std::sqrt(k_eval * k_eval + params.k_rashba * params.k_rashba);
    const int n_bonds = g.num_bonds();
    const int dim = 2 * n_bonds;

    // Per-bond propagation: e^{i q L} x (potential phase) x (spin rotation).
    std::vector<Eigen::Matrix2cd> prop(static_cast<std::size_t>(n_bonds));
    for (int e = 0; e < g.num_edges(); ++e) {
      const double len = g.edge_length(e);
      const double theta = params.k_rashba * len;
      const Eigen::Matrix2cd sigma = params.k_rashba == 0.0
                                         ? Eigen::Matrix2cd::Zero()
                                         : rashba_sigma(g.edge_unit(e)).eval();
      const Eigen::Matrix2cd rot = std::cos(theta) * Eigen::Matrix2cd::Identity() +
                                   Complex(0.0, std::sin(theta)) * sigma;
      const Complex phase =
          std::exp(Complex(0.0, q_int * len)) * std::exp(Complex(0.0, params.potential(e) * len));
      const Complex phase_rev =
          std::exp(Complex(0.0, q_int * len)) * std::exp(Complex(0.0, -params.potential(e) * len));
      prop[static_cast<std::size_t>(2 * e)] = phase * rot;
      prop[static_cast<std::size_t>(2 * e + 1)] = phase_rev * rot.adjoint();
    }

    // Per-vertex scattering over the attachment list: interior ends in
    // ends_at order, then the lead (at lead vertices).
    std::vector<Eigen::MatrixXcd> vertex_s(static_cast<std::size_t>(g.num_vertices()));
    for (int v = 0; v < g.num_vertices(); ++v) {
      const int d_int = g.degree(v);
      const bool has_lead = v == lead_in || v == lead_out;
      if (params.is_dirichlet(v)) {
        vertex_s[static_cast<std::size_t>(v)] =
            -Eigen::MatrixXcd::Identity(d_int, d_int);
        continue;
      }
      std::vector<double> q(static_cast<std::size_t>(d_int), q_int);
      if (has_lead) q.push_back(k_eval);
      vertex_s[static_cast<std::size_t>(v)] =
          detail::delta_vertex_scattering(q, params.coupling(v));
    }

    // Assemble I - S_int as a sparse operator on bond-spin amplitudes.
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(dim) * 8);
    for (int i = 0; i < dim; ++i) trip.emplace_back(i, i, Complex(1.0, 0.0));
    for (int v = 0; v < g.num_vertices(); ++v) {
      const auto& ends = g.ends_at(v);
      const auto& sv = vertex_s[static_cast<std::size_t>(v)];
      for (std::size_t jin = 0; jin < ends.size(); ++jin) {
        const int b_in = MetricGraph::end_incoming_bond(ends[jin]);
        const Eigen::Matrix2cd& pb = prop[static_cast<std::size_t>(b_in)];
        for (std::size_t jout = 0; jout < ends.size(); ++jout) {
          const Complex coef = sv(static_cast<Eigen::Index>(jout), static_cast<Eigen::Index>(jin));
          if (coef == Complex(0.0, 0.0)) continue;
          const int b_out = MetricGraph::end_outgoing_bond(ends[jout]);
          for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
              trip.emplace_back(2 * b_out + r, 2 * b_in + c, -coef * pb(r, c));
            }
          }
        }
      }
    }
    Eigen::SparseMatrix<Complex> a(dim, dim);
    a.setFromTriplets(trip.begin(), trip.end());

    // Source: unit incoming flux per spin channel at the input lead.
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(dim, 2);
    {
      const auto& ends = g.ends_at(lead_in);
      const auto& sv = vertex_s[static_cast<std::size_t>(lead_in)];
      const Eigen::Index lead_idx = static_cast<Eigen::Index>(ends.size());
      for (std::size_t jout = 0; jout < ends.size(); ++jout) {
        const int b_out = MetricGraph::end_outgoing_bond(ends[jout]);
        const Complex coef = sv(static_cast<Eigen::Index>(jout), lead_idx);
        rhs(2 * b_out + 0, 0) += coef;
        rhs(2 * b_out + 1, 1) += coef;
      }
    }

    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
      throw NumericalError("transmission: singular interior system");
    }
    const Eigen::MatrixXcd amp = lu.solve(rhs);
    if (lu.info() != Eigen::Success) {
      throw NumericalError("transmission: interior solve failed");
    }

    TransmissionResult result;
    result.t.setZero();
    result.r.setZero();
    for (int channel = 0; channel < 2; ++channel) {
      Eigen::Vector2cd t_out = Eigen::Vector2cd::Zero();
      Eigen::Vector2cd r_out = Eigen::Vector2cd::Zero();
      {
        const auto& ends = g.ends_at(lead_out);
        const auto& sv = vertex_s[static_cast<std::size_t>(lead_out)];
        const Eigen::Index lead_idx = static_cast<Eigen::Index>(ends.size());
        for (std::size_t jin = 0; jin < ends.size(); ++jin) {
          const int b_in = MetricGraph::end_incoming_bond(ends[jin]);
          const Eigen::Vector2cd arriving =
              prop[static_cast<std::size_t>(b_in)] *
              amp.block<2, 1>(2 * b_in, channel);
          t_out += sv(lead_idx, static_cast<Eigen::Index>(jin)) * arriving;
        }
      }
      {
        const auto& ends = g.ends_at(lead_in);
        const auto& sv = vertex_s[static_cast<std::size_t>(lead_in)];
        const Eigen::Index lead_idx = static_cast<Eigen::Index>(ends.size());
        Eigen::Vector2cd chi = Eigen::Vector2cd::Zero();
        chi(channel) = 1.0;
        r_out = sv(lead_idx, lead_idx) * chi;
        for (std::size_t jin = 0; jin < ends.size(); ++jin) {
          const int b_in = MetricGraph::end_incoming_bond(ends[jin]);
          const Eigen::Vector2cd arriving =
              prop[static_cast<std::size_t>(b_in)] *
              amp.block<2, 1>(2 * b_in, channel);
          r_out += sv(lead_idx, static_cast<Eigen::Index>(jin)) * arriving;
        }
      }
      result.t.col(channel) = t_out;
      result.r.col(channel) = r_out;
      const double flux_sum = t_out.squaredNorm() + r_out.squaredNorm();
      result.unitarity_deficit = std::max(result.unitarity_deficit, std::abs(flux_sum - 1.0));
      result.total += t_out.squaredNorm();
    }
    if (result.unitarity_deficit > 1e-8) {
      throw NumericalError("transmission: unitarity deficit " +
                           std::to_string(result.unitarity_deficit));
    }
    return result;
  };

  try {
    return solve_at(k);
  } catch (const NumericalError&) {
    return solve_at(k + 1e-9);
  }
}

inline TransmissionResult transmission(const DiamondChain& chain, double k,
                                       double k_rashba, double flux) {
  RashbaParams params;
  params.k_rashba = k_rashba;
  params.edge_potentials = diamond_flux_potentials(chain, flux);
  return transmission(chain.graph, params, chain.left_vertex, chain.right_vertex, k);
}

struct LocalizationPoint {
  double k_rashba = 0.0;
  double flux = 0.0;
  double g_mean = 0.0;
  double g_min = 0.0;
};

/// Conductance map over a (k_R, flux) grid.  Each grid point averages G over
/// k_samples deterministic midpoint wavenumbers uniformly covering
/// (0, pi/L]; rows are ordered with k_R as the outer loop.
inline std::vector<LocalizationPoint> localization_scan(const DiamondChain& chain,
                                                        const std::vector<double>& k_rashba_grid,
                                                        const std::vector<double>& flux_grid,
                                                        int k_samples, int threads = 1) {
  if (k_rashba_grid.empty() || flux_grid.empty()) {
    throw std::invalid_argument("localization_scan: empty grid");
  }
  if (k_samples < 1) throw std::invalid_argument("localization_scan: k_samples >= 1");
  const int total = static_cast<int>(k_rashba_grid.size() * flux_grid.size());
  std::vector<LocalizationPoint> out(static_cast<std::size_t>(total));
  const double k_max = kPi / chain.edge_length;
  parallel_blocks(total, std::min(total, std::max(1, threads) * 4), threads,
                  [&](int, int lo, int hi) {
                    for (int idx = lo; idx < hi; ++idx) {
                      const std::size_t ik = static_cast<std::size_t>(idx) / flux_grid.size();
                      const std::size_t jf = static_cast<std::size_t>(idx) % flux_grid.size();
                      LocalizationPoint p;
                      p.k_rashba = k_rashba_grid[ik];
                      p.flux = flux_grid[jf];
                      double sum = 0.0;
                      double minimum = std::numeric_limits<double>::infinity();
                      for (int i = 0; i < k_samples; ++i) {
                        const double k = (i + 0.5) * k_max / k_samples;
                        const double g = transmission(chain, k, p.k_rashba, p.flux).total;
                        sum += g;
                        minimum = std::min(minimum, g);
                      }
                      p.g_mean = sum / k_samples;
                      p.g_min = minimum;
                      out[static_cast<std::size_t>(idx)] = p;
                    }
                  });
  return out;
}

/// Closed-form band machinery for the T3 (dice) lattice with delta couplings
/// lambda at the valency-6 centers and mu at the valency-3 rim vertices,
/// evaluated in the parameter regime where the band condition reduces to a
/// product of two shifted cosines.
struct T3BandQuery {
  double energy = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double k_rashba = kPi / 2.0;  // regime: cos k_R = 0
  double omega = -kPi / 6.0;    // regime: omega in -pi/6 + pi Z
  bool enforce_regime = true;
};

namespace detail {

inline void t3_check_regime(const T3BandQuery& q) {
  if (!q.enforce_regime) return;
  if (std::abs(std::cos(q.k_rashba)) > 1e-9) {
    throw std::invalid_argument("t3_band_value: out-of-regime (need cos k_R = 0)");
  }
  if (std::abs(std::remainder(q.omega + kPi / 6.0, kPi)) > 1e-9) {
    throw std::invalid_argument("t3_band_value: out-of-regime (need omega in -pi/6 + pi Z)");
  }
}

}  // namespace detail

inline double t3_band_value(const T3BandQuery& q) {
  detail::t3_check_regime(q);
  const double s_sq = q.energy + q.k_rashba * q.k_rashba;
  if (!(s_sq > 0.0)) {
    throw std::invalid_argument("t3_band_value: need E + k_R^2 > 0");
  }
  if ((q.lambda != 0.0 || q.mu != 0.0) && !(q.energy > 0.0)) {
    throw std::invalid_argument("t3_band_value: need E > 0 for nonzero couplings");
  }
  const double s = std::sqrt(s_sq);
  const double cs = std::cos(s);
  const double sn = std::sin(s);
  const double sqrt_e = q.lambda != 0.0 || q.mu != 0.0 ? std::sqrt(q.energy) : 1.0;
  const double first = cs + q.lambda / (6.0 * sqrt_e) * sn;
  const double second = cs + q.mu / (3.0 * sqrt_e) * sn;
  return first * second;
}

/// Membership in [0, 1/6] union {1/3} union [1/2, 2/3] (singletons tested to
/// 1e-12), together with the solutions of sin sqrt(E + k_R^2) = 0; the
/// Neumann case (lambda = mu = 0) additionally admits band value 1.
inline bool t3_in_spectrum(const T3BandQuery& q) {
  const double value = t3_band_value(q);
  const double s = std::sqrt(q.energy + q.k_rashba * q.k_rashba);
  if (std::abs(std::sin(s)) <= 1e-12) return true;
  if (value >= 0.0 && value <= 1.0 / 6.0) return true;
  if (std::abs(value - 1.0 / 3.0) <= 1e-12) return true;
  if (value >= 0.5 && value <= 2.0 / 3.0) return true;
  if (q.lambda == 0.0 && q.mu == 0.0 && std::abs(value - 1.0) <= 1e-12) return true;
  return false;
}

/// Energies in (e_min, e_max] at which every band collapses (band value
/// exactly 1/3), for integer k_R; the collapse regime further requires
/// omega in pi/2 + pi Z, which does not enter the root condition.  Roots are
/// bracketed on a grid in x = sqrt(E + k_R^2) and bisected to 1e-12.
inline std::vector<double> t3_flat_bands(double lambda, double mu, double k_rashba,
                                         double e_min, double e_max) {
  if (!(e_max > e_min)) throw std::invalid_argument("t3_flat_bands: empty range");
  if (std::abs(k_rashba - std::round(k_rashba)) > 1e-9) {
    throw std::invalid_argument("t3_flat_bands: out-of-regime (need k_R integer)");
  }
  const double k2 = k_rashba * k_rashba;
  double lo = e_min;
  if (lambda != 0.0 || mu != 0.0) {
    if (!(e_max > 0.0)) throw std::invalid_argument("t3_flat_bands: need E > 0 range");
    lo = std::max(lo, 1e-12);
  }
  lo = std::max(lo, -k2 + 1e-12);
  if (!(e_max > lo)) return {};

  const auto value_at_x = [&](double x) {
    T3BandQuery q;
    q.energy = x * x - k2;
    q.lambda = lambda;
    q.mu = mu;
    q.k_rashba = k_rashba;
    q.enforce_regime = false;
    return t3_band_value(q) - 1.0 / 3.0;
  };

  const double x_lo = std::sqrt(lo + k2);
  const double x_hi = std::sqrt(e_max + k2);
  const double step = 0.05;
  const int n = std::max(2, static_cast<int>(std::ceil((x_hi - x_lo) / step)) + 1);
  std::vector<double> roots;
  double prev_x = x_lo;
  double prev_f = value_at_x(prev_x);
  for (int i = 1; i < n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (n - 1);
    const double f = value_at_x(x);
    if (prev_f == 0.0) {
      roots.push_back(prev_x);
    } else if (prev_f * f < 0.0) {
      double a = prev_x, b = x, fa = prev_f;
      while (b - a > 1e-12) {
        const double mid = 0.5 * (a + b);
        const double fm = value_at_x(mid);
        if (fm == 0.0) {
          a = b = mid;
        } else if (fa * fm < 0.0) {
          b = mid;
        } else {
          a = mid;
          fa = fm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = f;
  }
  std::vector<double> energies;
  for (double x : roots) {
    const double e = x * x - k2;
    if (e > e_min && e <= e_max + 1e-12) energies.push_back(e);
  }
  return energies;
}

}  // namespace spingraph
