#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "spingraph/core.hpp"
#include "spingraph/graph.hpp"
#include "spingraph/rng.hpp"
#include "spingraph/su2.hpp"

namespace spingraph {

/// A cyclic equivalence class of closed bond sequences, stored as its
/// lexicographically minimal rotation.  `repetition` is r_p: the number of
/// times the primitive word is repeated to form this orbit.
struct PeriodicOrbit {
  std::vector<int> bonds;
  int repetition = 1;
  double length = 0.0;

  int steps() const { return static_cast<int>(bonds.size()); }
};

/// Lexicographically minimal rotation of a word.
inline std::vector<int> canonical_rotation(const std::vector<int>& word) {
  const int n = static_cast<int>(word.size());
  if (n <= 1) return word;
  int best = 0;
  for (int s = 1; s < n; ++s) {
    for (int i = 0; i < n; ++i) {
      const int a = word[(s + i) % n];
      const int b = word[(best + i) % n];
      if (a != b) {
        if (a < b) best = s;
        break;
      }
    }
  }
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = word[(best + i) % n];
  return out;
}

/// Build a PeriodicOrbit from any rotation of a closed bond word; validates
/// vertex consistency, canonicalizes, and detects the primitive period.
inline PeriodicOrbit make_orbit(const MetricGraph& g, const std::vector<int>& word) {
  const int n = static_cast<int>(word.size());
  if (n == 0) throw std::invalid_argument("make_orbit: empty word");
  for (int i = 0; i < n; ++i) {
    const int b = word[i];
    if (b < 0 || b >= g.num_bonds()) throw std::invalid_argument("make_orbit: bad bond index");
    if (g.bond_head(b) != g.bond_tail(word[(i + 1) % n])) {
      throw std::invalid_argument("make_orbit: consecutive bonds do not share a vertex");
    }
  }
  PeriodicOrbit p;
  p.bonds = canonical_rotation(word);
  int period = n;
  for (int q = 1; q < n; ++q) {
    if (n % q != 0) continue;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) ok = p.bonds[i] == p.bonds[(i + q) % n];
    if (ok) {
      period = q;
      break;
    }
  }
  p.repetition = n / period;
  for (int b : p.bonds) p.length += g.bond_length(b);
  return p;
}

/// Orbit traversed backwards (each bond reversed, order flipped), as its own
/// canonical class.  An orbit may equal its reverse.
inline PeriodicOrbit reversed_orbit(const MetricGraph& g, const PeriodicOrbit& p) {
  std::vector<int> rev(p.bonds.rbegin(), p.bonds.rend());
  for (int& b : rev) b = MetricGraph::bond_reverse(b);
  return make_orbit(g, rev);
}

struct OrbitEnumerationOptions {
  long long walk_cap = 5'000'000;  // abort threshold on the closed-walk count
  /// Optional 4N x 4N bond transition matrix: steps whose 2x2 block has norm
  /// below prune_tol are excluded (zero-amplitude transitions, e.g.
  /// backscattering at a degree-2 Neumann vertex, carry no weight and
  /// removing them keeps enumeration tractable).
  const Eigen::MatrixXcd* prune_transitions = nullptr;
  double prune_tol = 1e-12;
};

/// All periodic orbits with at most n_max steps.  Allowed steps are
/// consecutive bonds sharing a vertex (backscattering included unless pruned
/// via the options).  Deterministic order: by step count, then word.
inline std::vector<PeriodicOrbit> enumerate_orbits(const MetricGraph& g, int n_max,
                                                   const OrbitEnumerationOptions& opts = {}) {
  if (n_max < 0) throw std::invalid_argument("enumerate_orbits: n_max must be >= 0");
  std::vector<PeriodicOrbit> orbits;
  if (n_max == 0) return orbits;

  const int nb = g.num_bonds();
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(nb, nb);
  std::vector<std::vector<int>> succ(nb);
  for (int b = 0; b < nb; ++b) {
    for (int c = 0; c < nb; ++c) {
      if (g.bond_head(b) != g.bond_tail(c)) continue;
      if (opts.prune_transitions != nullptr &&
          opts.prune_transitions->block(2 * c, 2 * b, 2, 2).norm() <= opts.prune_tol) {
        continue;
      }
      succ[b].push_back(c);
      adj(c, b) = 1.0;
    }
  }

  {  // closed-walk budget estimate before enumerating
    double walks = 0.0;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(nb, nb);
    for (int n = 1; n <= n_max; ++n) {
      power = adj * power;
      walks += power.trace();
    }
    if (walks > static_cast<double>(opts.walk_cap)) {
      throw std::invalid_argument("enumerate_orbits: ~" + std::to_string(walks) +
                                  " closed walks exceed the cap of " +
                                  std::to_string(opts.walk_cap) +
                                  "; reduce n_max or raise the cap");
    }
  }

  std::set<std::vector<int>> seen;
  std::vector<int> path;
  long long visited = 0;
  // Walks starting at their minimal bond; deeper bonds never go below start.
  auto dfs = [&](auto&& self, int start, int bond) -> void {
    if (++visited > opts.walk_cap) {
      throw std::invalid_argument(
          "enumerate_orbits: walk budget exhausted; reduce n_max or raise the cap");
    }
    path.push_back(bond);
    if (g.bond_head(bond) == g.bond_tail(start)) {
      seen.insert(canonical_rotation(path));
    }
    if (static_cast<int>(path.size()) < n_max) {
      for (int next : succ[bond]) {
        if (next >= start) self(self, start, next);
      }
    }
    path.pop_back();
  };
  for (int start = 0; start < nb; ++start) dfs(dfs, start, start);

  orbits.reserve(seen.size());
  for (const auto& word : seen) orbits.push_back(make_orbit(g, word));
  std::sort(orbits.begin(), orbits.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    if (a.steps() != b.steps()) return a.steps() < b.steps();
    return a.bonds < b.bonds;
  });
  return orbits;
}

/// Signed scalar amplitude and SU(2) spin transport of one orbit.
struct OrbitWeight {
  double amplitude = 1.0;        // A_p, sign included
  int phase_index = 0;           // parity of the absorbed sign flips
  SU2 holonomy = SU2::Identity();  // d_p

  double trace() const { return holonomy.trace().real(); }
};

namespace detail {

/// Split a 2x2 block into signed scalar times SU(2).  The sign convention
/// puts Re tr(u) >= 0 on the unitary factor.
struct BlockFactors {
  double scalar = 0.0;
  SU2 unitary = SU2::Identity();
};

inline BlockFactors decompose_block(const Eigen::Matrix2cd& block) {
  BlockFactors out;
  const double sigma = std::sqrt(std::abs(block.determinant()));
  if (sigma < 1e-12) {
    if (block.norm() > 1e-10) {
      throw NumericalError("orbit_weight: block is singular but nonzero, not scalar x SU(2)");
    }
    return out;  // zero block: amplitude 0, identity transport
  }
  if ((block.adjoint() * block - sigma * sigma * Eigen::Matrix2cd::Identity()).norm() >
      kBlockDecompTol * (1.0 + sigma * sigma)) {
    throw NumericalError("orbit_weight: block is not a scalar multiple of a unitary");
  }
  SU2 u0 = block / sigma;
  if (std::abs(u0.determinant() - 1.0) > 1e-8) {
    throw NumericalError("orbit_weight: block/sigma is not special unitary");
  }
  const double sign = u0.trace().real() < 0.0 ? -1.0 : 1.0;
  out.scalar = sign * sigma;
  out.unitary = sign * u0;
  return out;
}

}  // namespace detail

/// A_p and d_p for an orbit, from the global bond transition matrix.  Step j
/// from bond b_j to b_{j+1} contributes the block T[b_{j+1}, b_j]; the
/// holonomy multiplies these right-to-left so the rightmost factor is the
/// first step.  Validates A_p * d_p against the exact block product.
inline OrbitWeight orbit_weight(const PeriodicOrbit& p, const Eigen::MatrixXcd& transition) {
  OrbitWeight w;
  Eigen::Matrix2cd product = Eigen::Matrix2cd::Identity();
  const int n = p.steps();
  for (int j = 0; j < n; ++j) {
    const int from = p.bonds[j];
    const int to = p.bonds[(j + 1) % n];
    const Eigen::Matrix2cd block = transition.block(2 * to, 2 * from, 2, 2);
    const auto factors = detail::decompose_block(block);
    w.amplitude *= factors.scalar;
    if (factors.scalar < 0.0) w.phase_index ^= 1;
    w.holonomy = factors.unitary * w.holonomy;
    product = block * product;
  }
  if ((w.amplitude * w.holonomy - product).norm() > 1e-8 * (1.0 + std::abs(w.amplitude))) {
    throw NumericalError("orbit_weight: scalar x SU(2) factorization drifted from block product");
  }
  return w;
}

/// Gaussian-smoothed periodic-orbit density of states evaluated on a k grid:
/// 2L/pi plus (1/pi) sum_p (l_p/r_p) A_p tr(d_p) cos(k l_p) exp(-(l_p w)^2/2).
inline std::vector<double> trace_formula_density(const std::vector<PeriodicOrbit>& orbits,
                                                 const std::vector<OrbitWeight>& weights,
                                                 double total_length,
                                                 const std::vector<double>& k_grid,
                                                 double smoothing_width) {
  if (orbits.size() != weights.size()) {
    throw std::invalid_argument("trace_formula_density: orbit/weight size mismatch");
  }
  if (!(smoothing_width > 0.0)) {
    throw std::invalid_argument("trace_formula_density: smoothing width must be positive");
  }
  std::vector<double> density(k_grid.size(), 2.0 * total_length / kPi);
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    const double l = orbits[i].length;
    const double damp = std::exp(-0.5 * l * smoothing_width * l * smoothing_width);
    const double coeff =
        (l / orbits[i].repetition) * weights[i].amplitude * weights[i].trace() * damp / kPi;
    if (std::abs(coeff) < 1e-300) continue;
    for (std::size_t j = 0; j < k_grid.size(); ++j) {
      density[j] += coeff * std::cos(k_grid[j] * l);
    }
  }
  return density;
}

enum class FormFactorKind { kDirac, kLaplace };

/// Orbit-pair form factor on a uniform tau grid.  Orbits are grouped into
/// equal-length classes (relative tolerance), each class contributing the
/// square of its summed weight at tau = l/(2L), binned per grid step:
/// Dirac carries the tr(d_p) factors and prefactor 1/(4(2L)^2); Laplace
/// drops the traces and uses 1/(2L)^2.
inline std::vector<double> form_factor_orbit_sum(const std::vector<PeriodicOrbit>& orbits,
                                                 const std::vector<OrbitWeight>& weights,
                                                 double total_length,
                                                 const std::vector<double>& tau_grid,
                                                 double length_tolerance = 1e-9,
                                                 FormFactorKind kind = FormFactorKind::kDirac) {
  if (orbits.size() != weights.size()) {
    throw std::invalid_argument("form_factor_orbit_sum: orbit/weight size mismatch");
  }
  if (tau_grid.size() < 2) {
    throw std::invalid_argument("form_factor_orbit_sum: tau grid needs >= 2 points");
  }
  const double dtau = tau_grid[1] - tau_grid[0];
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    if (std::abs(tau_grid[i] - tau_grid[i - 1] - dtau) > 1e-9 * std::abs(dtau)) {
      throw std::invalid_argument("form_factor_orbit_sum: tau grid must be uniform");
    }
  }
  std::vector<std::size_t> order(orbits.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return orbits[a].length < orbits[b].length;
  });

  const double heisenberg = 2.0 * total_length;
  const double prefactor = kind == FormFactorKind::kDirac
                               ? 1.0 / (4.0 * heisenberg * heisenberg)
                               : 1.0 / (heisenberg * heisenberg);
  std::vector<double> k_of_tau(tau_grid.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double class_sum = 0.0;
    const double l0 = orbits[order[i]].length;
    while (j < order.size() && orbits[order[j]].length - l0 <= length_tolerance * l0) {
      const auto& p = orbits[order[j]];
      const auto& w = weights[order[j]];
      double term = (p.length / p.repetition) * w.amplitude;
      if (kind == FormFactorKind::kDirac) term *= w.trace();
      class_sum += term;
      ++j;
    }
    const double tau = l0 / heisenberg;
    const long long bin = std::llround((tau - tau_grid[0]) / dtau);
    if (bin >= 0 && bin < static_cast<long long>(tau_grid.size()) &&
        std::abs(tau_grid[static_cast<std::size_t>(bin)] - tau) <= 0.5 * std::abs(dtau) + 1e-12) {
      k_of_tau[static_cast<std::size_t>(bin)] += prefactor * class_sum * class_sum / dtau;
    }
    i = j;
  }
  return k_of_tau;
}

enum class SpinEnsemble { kHaar, kIdentity };

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

/// Monte Carlo average of tr(d_p) tr(d_q) for the canonical orbit-pair
/// families: m = 1 is a single arc against itself, E[(tr A)^2]; m = 2 is one
/// arc reversed at a self-intersection, E[tr(BA) tr(B^{-1}A)], A and B
/// independent Haar on SU(2).  The identity ensemble freezes all transports
/// to I (the trivial-subgroup case).  Deterministic for fixed seed,
/// independent of thread count.
inline MonteCarloEstimate haar_pair_average(int m, long long samples, std::uint64_t seed,
                                            int threads = 1,
                                            SpinEnsemble ensemble = SpinEnsemble::kHaar) {
  if (m != 1 && m != 2) {
    throw std::invalid_argument("haar_pair_average: only m = 1 and m = 2 are supported");
  }
  if (samples < 1) throw std::invalid_argument("haar_pair_average: samples must be positive");
  MonteCarloEstimate est;
  est.samples = samples;
  if (ensemble == SpinEnsemble::kIdentity) {
    est.mean = 4.0;  // tr(I) tr(I)
    return est;
  }

  const int blocks = static_cast<int>(std::min<long long>(samples, 1024));
  std::vector<double> sums(blocks, 0.0), sumsqs(blocks, 0.0);
  SplitMix64 root(seed);
  parallel_blocks(blocks, blocks, threads, [&](int, int block, int) {
    const long long lo = samples * block / blocks;
    const long long hi = samples * (block + 1) / blocks;
    SplitMix64 rng = root.split(static_cast<std::uint64_t>(block));
    double s = 0.0, s2 = 0.0;
    for (long long i = lo; i < hi; ++i) {
      double value;
      if (m == 1) {
        const double t = haar_su2(rng).trace().real();
        value = t * t;
      } else {
        const SU2 a = haar_su2(rng);
        const SU2 b = haar_su2(rng);
        value = (b * a).trace().real() * (b.inverse() * a).trace().real();
      }
      s += value;
      s2 += value * value;
    }
    sums[block] = s;
    sumsqs[block] = s2;
  });
  double total = 0.0, total_sq = 0.0;
  for (int b = 0; b < blocks; ++b) {
    total += sums[b];
    total_sq += sumsqs[b];
  }
  const double n = static_cast<double>(samples);
  est.mean = total / n;
  const double var = std::max(0.0, total_sq / n - est.mean * est.mean);
  est.std_error = std::sqrt(var / n);
  return est;
}

}  // namespace spingraph
