#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/dirac.hpp"
#include "spingraph/graph.hpp"
#include "spingraph/matching.hpp"
#include "spingraph/pauli.hpp"

namespace spingraph {

/// det(I - S); the secular function whose zeros are the spectrum.
inline Complex secular_det(const Eigen::MatrixXcd& s) {
  return (Eigen::MatrixXcd::Identity(s.rows(), s.cols()) - s).determinant();
}

/// Bond scattering matrix S(k) = D(k) T(k) on directed-bond x spin space.
/// Slot order is bond-major (slot = 2 b + spin channel), bonds ordered
/// edge-forward, edge-reverse.  Block (b', b) of T is nonzero only when bond
/// b terminates where b' starts, and equals the vertex transition block from
/// the arrival end of b to the departure end of b'.
class BondScattering {
 public:
  enum class Kind { kDiracMassless, kDiracMassive, kPauli };

  /// Dirac operator with fixed per-vertex transitions (massless: gamma = 1).
  static BondScattering dirac_fixed(MetricGraph graph,
                                    std::vector<Eigen::MatrixXcd> transitions) {
    BondScattering bs(std::move(graph), Kind::kDiracMassless);
    bs.check_dims(transitions);
    bs.fixed_ = std::move(transitions);
    return bs;
  }

  /// Dirac operator from matching conditions; k enters through gamma(k) when
  /// the mass is positive.
  static BondScattering dirac(MetricGraph graph,
                              std::vector<MatchingConditions> conditions,
                              double mass) {
    BondScattering bs(std::move(graph),
                      mass > 0.0 ? Kind::kDiracMassive : Kind::kDiracMassless);
    if (static_cast<int>(conditions.size()) != bs.graph_.num_vertices()) {
      throw std::invalid_argument("BondScattering: one matching condition per vertex");
    }
    for (int v = 0; v < bs.graph_.num_vertices(); ++v) {
      if (conditions[v].dim() != 2 * bs.graph_.degree(v)) {
        throw std::invalid_argument("BondScattering: condition size != 2 * degree");
      }
      if (!check_self_adjoint(conditions[v]).ok()) {
        throw std::invalid_argument("self-adjointness violated at vertex " +
                                    std::to_string(bs.graph_.vertex_id(v)));
      }
    }
    bs.conditions_ = std::move(conditions);
    bs.mass_ = mass;
    if (bs.kind_ == Kind::kDiracMassless) {
      std::vector<Eigen::MatrixXcd> fixed;
      fixed.reserve(bs.conditions_.size());
      for (const auto& mc : bs.conditions_) {
        fixed.push_back(dirac_vertex_transition(mc, 1.0));
      }
      bs.fixed_ = std::move(fixed);
    }
    return bs;
  }

  /// Pauli operator: matching conditions per vertex plus one Zeeman field per
  /// edge.  The spectral parameter of scattering(.) is lambda, which must
  /// exceed every field magnitude.
  static BondScattering pauli(MetricGraph graph,
                              std::vector<MatchingConditions> conditions,
                              std::vector<Eigen::Vector3d> fields) {
    BondScattering bs(std::move(graph), Kind::kPauli);
    if (static_cast<int>(conditions.size()) != bs.graph_.num_vertices() ||
        static_cast<int>(fields.size()) != bs.graph_.num_edges()) {
      throw std::invalid_argument("BondScattering: need conditions per vertex and a field per edge");
    }
    for (int v = 0; v < bs.graph_.num_vertices(); ++v) {
      if (conditions[v].dim() != 2 * bs.graph_.degree(v)) {
        throw std::invalid_argument("BondScattering: condition size != 2 * degree");
      }
      if (!check_self_adjoint(conditions[v]).ok()) {
        throw std::invalid_argument("self-adjointness violated at vertex " +
                                    std::to_string(bs.graph_.vertex_id(v)));
      }
    }
    bs.conditions_ = std::move(conditions);
    bs.channels_.reserve(bs.graph_.num_edges());
    for (const auto& f : fields) bs.channels_.push_back(pauli_diagonalize_field(f));
    return bs;
  }

  const MetricGraph& graph() const { return graph_; }
  Kind kind() const { return kind_; }
  int dim() const { return 2 * graph_.num_bonds(); }
  bool k_dependent_transitions() const { return kind_ != Kind::kDiracMassless; }

  /// Spectral parameter floor: scans must stay above this value.
  double parameter_floor() const {
    if (kind_ != Kind::kPauli) return 0.0;
    double m = 0.0;
    for (const auto& c : channels_) m = std::max(m, c.magnitude);
    return m;
  }

  Eigen::MatrixXcd vertex_transition(int v, double k) const {
    switch (kind_) {
      case Kind::kDiracMassless:
        return fixed_[v];
      case Kind::kDiracMassive:
        return dirac_vertex_transition(conditions_[v], dirac_gamma(k, mass_));
      case Kind::kPauli: {
        std::vector<PauliChannel> ends;
        ends.reserve(graph_.degree(v));
        for (const auto& ref : graph_.ends_at(v)) ends.push_back(channels_[ref.edge]);
        return pauli_vertex_transition_normalized(conditions_[v], ends, k);
      }
    }
    throw std::logic_error("unreachable");
  }

  /// Global bond transition matrix T(k).
  Eigen::MatrixXcd bond_transition(double k) const {
    const int n = dim();
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
    for (int v = 0; v < graph_.num_vertices(); ++v) {
      const Eigen::MatrixXcd tv = vertex_transition(v, k);
      const auto& ends = graph_.ends_at(v);
      for (std::size_t jin = 0; jin < ends.size(); ++jin) {
        const int b_in = MetricGraph::end_incoming_bond(ends[jin]);
        for (std::size_t jout = 0; jout < ends.size(); ++jout) {
          const int b_out = MetricGraph::end_outgoing_bond(ends[jout]);
          t.block<2, 2>(2 * b_out, 2 * b_in) =
              tv.block(2 * static_cast<int>(jout), 2 * static_cast<int>(jin), 2, 2);
        }
      }
    }
    return t;
  }

  /// Diagonal propagation phases, one per slot.
  Eigen::VectorXd slot_phases(double k) const {
    Eigen::VectorXd ph(dim());
    for (int b = 0; b < graph_.num_bonds(); ++b) {
      const double l = graph_.bond_length(b);
      if (kind_ == Kind::kPauli) {
        const auto kk = pauli_channel_wavenumbers(k, channels_[MetricGraph::bond_edge(b)].magnitude);
        ph(2 * b) = kk[0] * l;
        ph(2 * b + 1) = kk[1] * l;
      } else {
        ph(2 * b) = k * l;
        ph(2 * b + 1) = k * l;
      }
    }
    return ph;
  }

  double slot_phase_sum(double k) const { return slot_phases(k).sum(); }

  Eigen::MatrixXcd scattering(double k) const {
    if (!(k > parameter_floor())) {
      throw std::invalid_argument("BondScattering: spectral parameter out of range");
    }
    const Eigen::VectorXd ph = slot_phases(k);
    Eigen::VectorXcd d(dim());
    for (int i = 0; i < dim(); ++i) d(i) = std::polar(1.0, ph(i));
    return d.asDiagonal() * bond_transition(k);
  }

  double unitarity_defect(double k) const {
    const Eigen::MatrixXcd s = scattering(k);
    return (s.adjoint() * s - Eigen::MatrixXcd::Identity(dim(), dim())).norm();
  }

  /// Accumulated phase of det T between two parameters, unwrapped by
  /// adaptive substepping (zero when transitions are k-independent).
  double residual_phase(double a, double b) const {
    if (!k_dependent_transitions()) return 0.0;
    const int nv = graph_.num_vertices();
    auto vertex_args = [&](double k) {
      std::vector<double> args(nv);
      for (int v = 0; v < nv; ++v) {
        args[v] = std::arg(vertex_transition(v, k).determinant());
      }
      return args;
    };
    int steps = 1;
    double prev = 0.0;
    for (int iter = 0; iter < 16; ++iter) {
      double total = 0.0;
      std::vector<double> left = vertex_args(a);
      for (int s = 1; s <= steps; ++s) {
        const double kr = a + (b - a) * s / steps;
        std::vector<double> right = vertex_args(kr);
        for (int v = 0; v < nv; ++v) {
          double d = right[v] - left[v];
          d -= kTwoPi * std::round(d / kTwoPi);
          total += d;
        }
        left = std::move(right);
      }
      if (iter > 0 && std::abs(total - prev) < 1e-9) return total;
      prev = total;
      steps *= 2;
    }
    throw NumericalError("BondScattering: residual phase unwrap did not settle");
  }

 private:
  BondScattering(MetricGraph graph, Kind kind) : graph_(std::move(graph)), kind_(kind) {}

  void check_dims(const std::vector<Eigen::MatrixXcd>& transitions) const {
    if (static_cast<int>(transitions.size()) != graph_.num_vertices()) {
      throw std::invalid_argument("BondScattering: one transition per vertex");
    }
    for (int v = 0; v < graph_.num_vertices(); ++v) {
      if (transitions[v].rows() != 2 * graph_.degree(v) ||
          transitions[v].cols() != 2 * graph_.degree(v)) {
        throw std::invalid_argument("BondScattering: transition size != 2 * degree");
      }
    }
  }

  MetricGraph graph_;
  Kind kind_;
  std::vector<Eigen::MatrixXcd> fixed_;
  std::vector<MatchingConditions> conditions_;
  std::vector<PauliChannel> channels_;
  double mass_ = 0.0;
};

struct Spectrum {
  std::vector<double> k;
  std::vector<int> multiplicity;
  double k_min = 0.0;
  double k_max = 0.0;
  double total_length = 0.0;

  int total_levels() const {
    return std::accumulate(multiplicity.begin(), multiplicity.end(), 0);
  }
};

struct ScanOptions {
  double tol = 1e-10;        // root localization width
  double grid_step = 0.0;    // 0: pi / (4 L_total)
  double cluster_tol = 0.0;  // 0: 1e-6 * pi / L_total
  int threads = 1;
  double unitarity_tol = kUnitaryTol;
};

/// Mean spectral counting function up to K (Weyl term with spin and both
/// Kramers partners): 2 L K / pi.
inline double weyl_count(double k, double total_length) {
  return 2.0 * total_length * k / kPi;
}

namespace detail {

struct PhasePoint {
  double k = 0.0;
  double phase_sum = 0.0;  // sum of eigenphases of S(k), each in [0, 2pi)
};

inline PhasePoint eval_phase_point(const BondScattering& bs, double k) {
  const Eigen::MatrixXcd s = bs.scattering(k);
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(s, false);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("find_spectrum: Schur decomposition failed");
  }
  PhasePoint p;
  p.k = k;
  for (int i = 0; i < s.rows(); ++i) {
    double a = std::arg(schur.matrixT()(i, i));
    if (a < 0.0) a += kTwoPi;
    p.phase_sum += a;
  }
  return p;
}

/// Exact number of unit-circle crossings of eigenphases in (a.k, b.k]: every
/// phase advances by the diagonal slot phases plus the slowly varying det T
/// drift, and each wrap past 2 pi is one spectral point.
inline long long crossings(const BondScattering& bs, const PhasePoint& a,
                           const PhasePoint& b) {
  const double advance = bs.slot_phase_sum(b.k) - bs.slot_phase_sum(a.k) +
                         bs.residual_phase(a.k, b.k);
  return std::llround((a.phase_sum + advance - b.phase_sum) / kTwoPi);
}

inline void refine_bracket(const BondScattering& bs, const PhasePoint& a,
                           const PhasePoint& b, long long count, double tol,
                           std::vector<std::pair<double, int>>& out) {
  if (count <= 0) return;
  if (b.k - a.k < tol) {
    out.emplace_back(0.5 * (a.k + b.k), static_cast<int>(count));
    return;
  }
  const PhasePoint m = eval_phase_point(bs, 0.5 * (a.k + b.k));
  long long left = crossings(bs, a, m);
  left = std::max(0LL, std::min(count, left));
  const long long right = count - left;
  refine_bracket(bs, a, m, left, tol, out);
  refine_bracket(bs, m, b, right, tol, out);
}

}  // namespace detail

/// All k in [k_min, k_max] with det(I - S(k)) = 0, located by tracking the
/// winding of the eigenphases of the unitary S(k) over a grid and bisecting
/// each crossing.  Degenerate roots (e.g. Kramers pairs) stay in one bracket
/// and are reported with their multiplicity.
inline Spectrum find_spectrum(const BondScattering& bs, double k_min, double k_max,
                              const ScanOptions& opts = {}) {
  if (!(k_min > bs.parameter_floor()) || !(k_max > k_min)) {
    throw std::invalid_argument("find_spectrum: bad scan range");
  }
  const double L = bs.graph().total_length();
  const double step = opts.grid_step > 0.0 ? opts.grid_step : kPi / (4.0 * L);
  const double cluster =
      opts.cluster_tol > 0.0 ? opts.cluster_tol : 1e-6 * kPi / L;
  const int n_intervals = std::max(1, static_cast<int>(std::ceil((k_max - k_min) / step)));

  {  // unitarity spot checks
    const double probes[] = {k_min, 0.5 * (k_min + k_max), k_max};
    for (double k : probes) {
      const double defect = bs.unitarity_defect(k);
      if (defect > opts.unitarity_tol * std::sqrt(static_cast<double>(bs.dim()))) {
        throw NumericalError("find_spectrum: scattering matrix is not unitary");
      }
    }
  }

  std::vector<double> grid(n_intervals + 1);
  for (int i = 0; i <= n_intervals; ++i) {
    grid[i] = k_min + (k_max - k_min) * static_cast<double>(i) / n_intervals;
  }

  std::vector<std::vector<std::pair<double, int>>> found(
      static_cast<std::size_t>(std::max(1, opts.threads)) * 4);
  parallel_blocks(n_intervals, static_cast<int>(found.size()), opts.threads,
                  [&](int block, int lo, int hi) {
                    auto& roots = found[block];
                    detail::PhasePoint left = detail::eval_phase_point(bs, grid[lo]);
                    for (int i = lo; i < hi; ++i) {
                      detail::PhasePoint right = detail::eval_phase_point(bs, grid[i + 1]);
                      const long long c = detail::crossings(bs, left, right);
                      if (c > 0) {
                        detail::refine_bracket(bs, left, right, c, opts.tol, roots);
                      }
                      left = right;
                    }
                  });

  std::vector<std::pair<double, int>> roots;
  for (const auto& block : found) {
    roots.insert(roots.end(), block.begin(), block.end());
  }
  std::sort(roots.begin(), roots.end());

  Spectrum sp;
  sp.k_min = k_min;
  sp.k_max = k_max;
  sp.total_length = L;
  for (const auto& [k, m] : roots) {
    if (!sp.k.empty() && k - sp.k.back() < cluster) {
      sp.multiplicity.back() += m;
    } else {
      sp.k.push_back(k);
      sp.multiplicity.push_back(m);
    }
  }
  return sp;
}

/// Halve all multiplicities (Kramers doublet lifting).  Requires every
/// multiplicity to be even.
inline Spectrum lift_kramers(const Spectrum& sp) {
  Spectrum out = sp;
  for (std::size_t i = 0; i < sp.multiplicity.size(); ++i) {
    if (sp.multiplicity[i] % 2 != 0) {
      throw std::invalid_argument("lift_kramers: odd multiplicity at k = " +
                                  std::to_string(sp.k[i]));
    }
    out.multiplicity[i] = sp.multiplicity[i] / 2;
  }
  return out;
}

/// Unfold to unit mean spacing via the Weyl law of the lifted spectrum:
/// x = L k / pi.  Multiplicities expand to repeated values.
inline std::vector<double> unfold(const Spectrum& sp) {
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(sp.total_levels()));
  for (std::size_t i = 0; i < sp.k.size(); ++i) {
    for (int m = 0; m < sp.multiplicity[i]; ++m) {
      x.push_back(sp.total_length * sp.k[i] / kPi);
    }
  }
  return x;
}

/// Gaussian-smoothed delta comb of a spectrum on a k grid, including the
/// mirror images at -k_n so the comb matches densities defined on the whole
/// line (the images are negligible away from k = 0).
inline std::vector<double> smoothed_counting_density(const Spectrum& sp,
                                                     const std::vector<double>& k_grid,
                                                     double width) {
  if (!(width > 0.0)) {
    throw std::invalid_argument("smoothed_counting_density: width must be positive");
  }
  const double norm = 1.0 / (width * std::sqrt(kTwoPi));
  std::vector<double> density(k_grid.size(), 0.0);
  for (std::size_t j = 0; j < k_grid.size(); ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < sp.k.size(); ++i) {
      const double dm = (k_grid[j] - sp.k[i]) / width;
      const double dp = (k_grid[j] + sp.k[i]) / width;
      d += sp.multiplicity[i] * (std::exp(-0.5 * dm * dm) + std::exp(-0.5 * dp * dp));
    }
    density[j] = d * norm;
  }
  return density;
}

}  // namespace spingraph
