// Acceptance suite.  Each test prints exactly one summary line of the form
//   ACCEPTANCE <n> <PASS|FAIL> - <label> (<seconds>s)
// before asserting its checks, so a full run yields ten verdict lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "test_support.hpp"

using namespace spingraph;
using namespace testsup;

namespace {

struct Criterion {
  int index;
  std::string label;
  std::vector<std::pair<std::string, bool>> checks;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Criterion(int i, std::string l) : index(i), label(std::move(l)) {}

  void check(const std::string& name, bool ok) { checks.emplace_back(name, ok); }

  void finish() {
    bool pass = true;
    for (const auto& c : checks) pass = pass && c.second;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("ACCEPTANCE %2d %s - %s (%.1fs)\n", index, pass ? "PASS" : "FAIL",
                label.c_str(), seconds);
    std::fflush(stdout);
    for (const auto& c : checks) {
      INFO(c.first);
      CHECK(c.second);
    }
    REQUIRE(pass);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (double x = lo; x <= hi + 1e-12; x += step) g.push_back(x);
  return g;
}

// Complete-graph fixture with Haar spin rotations at a pinned seed, shared by
// the spectral-statistics criteria.  The scan reaches far enough that the
// Kramers-lifted spectrum holds at least 5000 levels.
constexpr std::uint64_t kHaarSeed = 20240915;
constexpr double kFixtureKMax = 2550.0;

struct HaarFixture {
  MetricGraph graph;
  Spectrum spectrum;
  bool all_even = false;
  std::vector<double> unfolded;  // Kramers-lifted and unfolded (empty if lift fails)
};

const HaarFixture& haar_fixture() {
  static const HaarFixture fx = [] {
    HaarFixture f{load_graph("k4.json"), Spectrum{}, false, {}};
    const auto conds = build_matching_conditions(f.graph, load_json("dirac_haar_k4.json"),
                                                 kHaarSeed);
    const BondScattering bs = BondScattering::dirac(f.graph, conds, 0.0);
    f.spectrum = find_spectrum(bs, 0.5, kFixtureKMax);
    f.all_even = std::all_of(f.spectrum.multiplicity.begin(), f.spectrum.multiplicity.end(),
                             [](int m) { return m % 2 == 0; });
    if (f.all_even && !f.spectrum.k.empty()) f.unfolded = unfold(lift_kramers(f.spectrum));
    return f;
  }();
  return fx;
}

// Control spectrum on the same graph with identity spin rotations (spin is a
// spectator; the lifted levels follow orthogonal-class statistics).
const std::vector<double>& identity_control_unfolded() {
  static const std::vector<double> levels = [] {
    const MetricGraph g = load_graph("k4.json");
    std::vector<MatchingConditions> conds;
    for (int v = 0; v < g.num_vertices(); ++v) {
      conds.push_back(neumann_like_conditions(
          std::vector<SU2>(static_cast<std::size_t>(g.degree(v)), SU2::Identity())));
    }
    const BondScattering bs = BondScattering::dirac(g, conds, 0.0);
    const Spectrum sp = find_spectrum(bs, 0.5, kFixtureKMax);
    for (int m : sp.multiplicity) {
      if (m % 2 != 0) return std::vector<double>{};
    }
    return unfold(lift_kramers(sp));
  }();
  return levels;
}

BondScattering neumann_identity_operator(const MetricGraph& g) {
  std::vector<MatchingConditions> conds;
  for (int v = 0; v < g.num_vertices(); ++v) {
    conds.push_back(neumann_like_conditions(
        std::vector<SU2>(static_cast<std::size_t>(g.degree(v)), SU2::Identity())));
  }
  return BondScattering::dirac(g, std::move(conds), 0.0);
}

double bisect(double (*f)(double), double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double flat_band_gap(double x) { return std::cos(x) * std::cos(x) - 1.0 / 3.0; }

}  // namespace

TEST_CASE("acceptance 1: vertex transitions are unitary and time-reversal behaves") {
  Criterion crit(1, "unitary transitions and time-reversal symmetry");
  SplitMix64 rng(0xACCE5501u);

  double worst_defect = 0.0;
  bool all_self_adjoint = true;
  for (int i = 0; i < 100; ++i) {
    const int d = 1 + (i % 4);
    const MatchingConditions mc = random_valid_conditions(d, rng);
    all_self_adjoint = all_self_adjoint && check_self_adjoint(mc).ok();
    const double gamma = (i % 2 == 0) ? 1.0 : 0.05 + 0.9 * rng.uniform();
    worst_defect = std::max(worst_defect, unitary_defect(dirac_vertex_transition(mc, gamma)));
  }
  crit.check("random conditions are self-adjoint", all_self_adjoint);
  crit.check("transition unitarity defect < 1e-9", worst_defect < 1e-9);

  bool all_trs = true;
  double worst_trs_defect = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = 1 + (i % 4);
    const Eigen::MatrixXcd x = random_symmetric_unitary(d, rng);
    const std::vector<SU2> us = random_su2s(d, rng);
    const Eigen::MatrixXcd t = tr_symmetric_transition(x, us);
    all_trs = all_trs && check_time_reversal(t);
    worst_trs_defect = std::max(worst_trs_defect, unitary_defect(t));
    const Eigen::MatrixXcd tn = tr_symmetric_transition(neumann_X(d), us);
    all_trs = all_trs && check_time_reversal(tn);
  }
  crit.check("rotated symmetric transitions pass the time-reversal check", all_trs);
  crit.check("their unitarity defect < 1e-9", worst_trs_defect < 1e-9);
  crit.finish();
}

TEST_CASE("acceptance 2: closed-form reference spectra") {
  Criterion crit(2, "interval and loop spectra match closed forms");

  // Interval of length pi with hard-wall ends: levels at k = n, doublets.
  {
    const MetricGraph g = interval_graph(kPi);
    std::vector<MatchingConditions> conds{dirichlet_conditions(1), dirichlet_conditions(1)};
    const Spectrum sp = find_spectrum(BondScattering::dirac(g, conds, 0.0), 0.5, 100.5);
    bool roots_ok = sp.k.size() >= 100;
    bool mults_ok = roots_ok;
    for (std::size_t n = 0; roots_ok && n < 100; ++n) {
      roots_ok = roots_ok && std::abs(sp.k[n] - static_cast<double>(n + 1)) < 1e-8;
      mults_ok = mults_ok && sp.multiplicity[n] == 2;
    }
    crit.check("interval: first 100 roots within 1e-8", roots_ok);
    crit.check("interval: multiplicity 2 throughout", mults_ok);
  }

  // Loop of length 2 pi: levels at k = n with multiplicity 4.
  {
    const Spectrum sp = find_spectrum(neumann_identity_operator(loop_graph(kTwoPi)), 0.5, 100.5);
    bool roots_ok = sp.k.size() >= 100;
    bool mults_ok = roots_ok;
    for (std::size_t n = 0; roots_ok && n < 100; ++n) {
      roots_ok = roots_ok && std::abs(sp.k[n] - static_cast<double>(n + 1)) < 1e-8;
      mults_ok = mults_ok && sp.multiplicity[n] == 4;
    }
    crit.check("loop: first 100 roots within 1e-8", roots_ok);
    crit.check("loop: multiplicity 4 throughout", mults_ok);
  }
  crit.finish();
}

TEST_CASE("acceptance 3: haar-rotated complete graph obeys the counting law") {
  Criterion crit(3, "Kramers doubling and mean counting on the complete graph");
  const HaarFixture& fx = haar_fixture();

  crit.check("spectrum has at least 2000 levels", fx.spectrum.total_levels() >= 2000);
  crit.check("every multiplicity is even", fx.all_even);

  const double total = static_cast<double>(fx.spectrum.total_levels());
  const double expected_full = weyl_count(kFixtureKMax, fx.spectrum.total_length);
  crit.check("count at the top of the scan within 2% of 2LK/pi",
             std::abs(total - expected_full) / expected_full < 0.02);

  const double k_half = 0.5 * kFixtureKMax;
  double count_half = 0.0;
  for (std::size_t i = 0; i < fx.spectrum.k.size(); ++i) {
    if (fx.spectrum.k[i] <= k_half) count_half += fx.spectrum.multiplicity[i];
  }
  const double expected_half = weyl_count(k_half, fx.spectrum.total_length);
  crit.check("count at half range within 2% of 2LK/pi",
             std::abs(count_half - expected_half) / expected_half < 0.02);
  crit.finish();
}

TEST_CASE("acceptance 4: spacing statistics select the symplectic class") {
  Criterion crit(4, "lifted spacings: symplectic for Haar rotations, orthogonal for identity");
  const HaarFixture& fx = haar_fixture();

  crit.check("at least 5000 lifted levels", fx.unfolded.size() >= 5000);
  if (fx.unfolded.size() >= 2) {
    const SpacingSample sample = nns_statistics(fx.unfolded, 40);
    const double ks_gse = ks_distance(sample, Ensemble::kGSE);
    const double ks_goe = ks_distance(sample, Ensemble::kGOE);
    crit.check("Haar rotations: KS distance to GSE < 0.05 (measured " + fmt(ks_gse) + ")",
               ks_gse < 0.05);
    crit.check("Haar rotations: KS distance to GOE > 0.15 (measured " + fmt(ks_goe) + ")",
               ks_goe > 0.15);
  } else {
    crit.check("Haar rotations: lifted spectrum available", false);
  }

  const std::vector<double>& control = identity_control_unfolded();
  crit.check("identity control: at least 5000 lifted levels", control.size() >= 5000);
  if (control.size() >= 2) {
    const SpacingSample sample = nns_statistics(control, 40);
    const double ks_gse = ks_distance(sample, Ensemble::kGSE);
    const double ks_goe = ks_distance(sample, Ensemble::kGOE);
    crit.check("identity control: KS distance to GOE < 0.05 (measured " + fmt(ks_goe) + ")",
               ks_goe < 0.05);
    crit.check("identity control: KS distance to GSE > 0.15 (measured " + fmt(ks_gse) + ")",
               ks_gse > 0.15);
  } else {
    crit.check("identity control: lifted spectrum available", false);
  }
  crit.finish();
}

TEST_CASE("acceptance 5: periodic-orbit density matches the smoothed spectrum") {
  Criterion crit(5, "orbit sum converges to the smoothed counting density");

  struct Case {
    MetricGraph graph;
    double mean_edge;
    double grid_lo, grid_hi;
    double scan_hi;
    const char* name;
  };
  const std::vector<Case> cases{
      {loop_graph(kTwoPi), kTwoPi, 0.5, 4.5, 5.5, "loop"},
      {path3_graph(), 1.1, 1.5, 8.0, 9.6, "path"},
  };

  for (const Case& c : cases) {
    const BondScattering bs = neumann_identity_operator(c.graph);
    const Spectrum sp = find_spectrum(bs, 0.05, c.scan_hi);
    const double width = 0.1 * kPi / c.mean_edge;
    const std::vector<double> grid = uniform_grid(c.grid_lo, c.grid_hi, 0.01);
    const std::vector<double> exact = smoothed_counting_density(sp, grid, width);
    const Eigen::MatrixXcd transition = bs.bond_transition(1.0);
    const double length_cap = 20.0 * c.mean_edge;

    std::vector<double> errors;
    for (const int n_max : {10, 15, 20}) {
      OrbitEnumerationOptions opts;
      opts.prune_transitions = &transition;
      std::vector<PeriodicOrbit> orbits = enumerate_orbits(c.graph, n_max, opts);
      orbits.erase(std::remove_if(orbits.begin(), orbits.end(),
                                  [&](const PeriodicOrbit& p) { return p.length > length_cap; }),
                   orbits.end());
      std::vector<OrbitWeight> weights;
      weights.reserve(orbits.size());
      for (const auto& p : orbits) weights.push_back(orbit_weight(p, transition));
      const std::vector<double> density =
          trace_formula_density(orbits, weights, sp.total_length, grid, width);
      errors.push_back(rel_l2(density, exact));
    }

    crit.check(std::string(c.name) + ": relative L2 error below 5% at every depth",
               *std::max_element(errors.begin(), errors.end()) < 0.05);
    crit.check(std::string(c.name) + ": error non-increasing in the step budget",
               errors[1] <= errors[0] + 1e-9 && errors[2] <= errors[1] + 1e-9);
  }
  crit.finish();
}

TEST_CASE("acceptance 6: Monte Carlo pair averages") {
  Criterion crit(6, "spin pair averages over a million samples");
  const MonteCarloEstimate diag = haar_pair_average(1, 1'000'000, 6061);
  const MonteCarloEstimate cross = haar_pair_average(2, 1'000'000, 6062);
  crit.check("m=1 average within 0.02 of 1.00", std::abs(diag.mean - 1.0) <= 0.02);
  crit.check("m=2 average within 0.02 of -0.50", std::abs(cross.mean + 0.5) <= 0.02);
  crit.finish();
}

TEST_CASE("acceptance 7: series coefficients obey the exact half-power relation") {
  Criterion crit(7, "symplectic series = (-1/2)^(m+1) times orthogonal series, exactly");
  bool all_exact = true;
  Rational half_power(-1, 2);  // becomes (-1/2)^(m+1) after the in-loop multiply
  for (int m = 1; m <= 4; ++m) {
    half_power = half_power * Rational(-1, 2);
    const Rational gse = rmt_series_coefficient(Ensemble::kGSE, m);
    const Rational goe = rmt_series_coefficient(Ensemble::kGOE, m);
    all_exact = all_exact && (gse == half_power * goe);
  }
  crit.check("rational identity holds for m = 1..4", all_exact);

  // The numeric partial sums must agree with the rational coefficients.
  const double tau = 0.5;
  double expected = 0.0;
  for (int m = 1; m <= 4; ++m) {
    expected += rmt_series_coefficient(Ensemble::kGSE, m).value() * std::pow(tau, m);
  }
  crit.check("numeric series matches its own coefficients",
             std::abs(rmt_series(Ensemble::kGSE, tau) - expected) < 1e-15);
  crit.finish();
}

TEST_CASE("acceptance 8: small-tau form factor slope") {
  Criterion crit(8, "form factor rises with slope 1/2 at small tau");
  const HaarFixture& fx = haar_fixture();
  crit.check("lifted spectrum available", fx.unfolded.size() >= 5000);
  if (fx.unfolded.size() >= 5000) {
    std::vector<double> tau_grid;  // default resolution: step 0.02, bin centers
    for (int i = 0; i < 15; ++i) tau_grid.push_back(0.01 + 0.02 * i);
    const FormFactorEstimate est = form_factor_from_spectrum(fx.unfolded, tau_grid, 16);
    const double slope = fit_slope_through_origin(est.tau, est.value, 0.05, 0.2);
    crit.check("fitted slope on [0.05, 0.2] within 0.5 +- 0.15 (measured " + fmt(slope) + ")",
               std::abs(slope - 0.5) <= 0.15);
  }
  crit.finish();
}

TEST_CASE("acceptance 9: dice-lattice band condition and flat bands") {
  Criterion crit(9, "band membership matches the cosine rule; flat roots to 1e-9");

  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    T3BandQuery q;
    q.energy = 0.25 + (40.0 - 0.25) * static_cast<double>(i) / 9999.0;
    const double s = std::sqrt(q.energy + q.k_rashba * q.k_rashba);
    const double c2 = std::cos(s) * std::cos(s);
    const bool expected = std::abs(std::sin(s)) <= 1e-12 || c2 <= 1.0 / 6.0 ||
                          std::abs(c2 - 1.0 / 3.0) <= 1e-12 ||
                          (c2 >= 0.5 && c2 <= 2.0 / 3.0) || std::abs(c2 - 1.0) <= 1e-12;
    if (t3_in_spectrum(q) != expected) ++mismatches;
  }
  crit.check("membership agrees with the cosine rule on all 10^4 grid points",
             mismatches == 0);

  const std::vector<double> bands = t3_flat_bands(0.0, 0.0, 0.0, 0.5, 43.0);
  crit.check("four flat-band energies in the window", bands.size() == 4);
  if (bands.size() == 4) {
    const double brackets[4][2] = {{0.9, 1.0}, {2.1, 2.2}, {4.0, 4.15}, {5.3, 5.4}};
    bool roots_ok = true;
    for (int i = 0; i < 4; ++i) {
      const double x = bisect(flat_band_gap, brackets[i][0], brackets[i][1]);
      roots_ok = roots_ok && std::abs(std::sqrt(bands[static_cast<std::size_t>(i)]) - x) < 1e-9;
    }
    crit.check("flat roots match an independent bisection to 1e-9", roots_ok);
  }
  crit.finish();
}

TEST_CASE("acceptance 10: diamond-chain conductance dip") {
  Criterion crit(10, "spin-orbit cage: sharp dip at 2 k_R L / pi = 1, robust to 1% disorder");
  const int cells = 50;
  const DiamondChain chain = build_diamond_chain(cells, 1.0);

  std::vector<double> kr_grid;
  for (int i = 0; i <= 40; ++i) kr_grid.push_back(kPi * (static_cast<double>(i) / 40.0));
  const std::vector<LocalizationPoint> scan =
      localization_scan(chain, kr_grid, {0.0}, 20);

  crit.check("free chain conducts at k_R = 0", scan.front().g_mean > 0.1);
  crit.check("mean conductance at the dip below 1e-4", scan[20].g_mean < 1e-4);

  std::size_t argmin = 0;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    if (scan[i].g_mean < scan[argmin].g_mean) argmin = i;
  }
  crit.check("global minimum of the sweep sits at 2 k_R L / pi = 1", argmin == 20);

  SplitMix64 rng(424242u);
  std::vector<double> overrides;
  for (int e = 0; e < 4 * cells; ++e) {
    overrides.push_back(1.0 * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0)));
  }
  const DiamondChain perturbed = build_diamond_chain(cells, 1.0, overrides);
  const std::vector<LocalizationPoint> dip =
      localization_scan(perturbed, {kPi * 0.5}, {0.0}, 20);
  crit.check("dip persists below 1e-2 under 1% length disorder", dip.front().g_mean < 1e-2);
  crit.finish();
}
