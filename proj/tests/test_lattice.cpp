// Diamond-chain construction, two-lead transmission (flux and spin-orbit
// cages), the localization scan, and the T3 band conditions.

#include "test_support.hpp"

using namespace spingraph;
using namespace testsup;

TEST_CASE("diamond chain geometry") {
  const DiamondChain one = build_diamond_chain(1, 1.0);
  REQUIRE(one.graph.num_vertices() == 4);
  REQUIRE(one.graph.num_edges() == 4);
  REQUIRE(one.cells == 1);

  const DiamondChain chain = build_diamond_chain(50, 1.0);
  REQUIRE(chain.graph.num_vertices() == 151);
  REQUIRE(chain.graph.num_edges() == 200);
  REQUIRE(chain.graph.degree(chain.left_vertex) == 2);
  REQUIRE(chain.graph.degree(chain.right_vertex) == 2);
  int deg4 = 0, deg2 = 0;
  for (int v = 0; v < chain.graph.num_vertices(); ++v) {
    if (chain.graph.degree(v) == 4) ++deg4;
    if (chain.graph.degree(v) == 2) ++deg2;
  }
  REQUIRE(deg4 == 49);   // interior spine
  REQUIRE(deg2 == 102);  // boundary spine + tops + bottoms

  const double c = 1.0 / std::sqrt(2.0);
  REQUIRE((chain.graph.edge_unit(0) - Eigen::Vector2d(c, c)).norm() < 1e-12);
  REQUIRE((chain.graph.edge_unit(1) - Eigen::Vector2d(c, -c)).norm() < 1e-12);
  REQUIRE((chain.graph.edge_unit(2) - Eigen::Vector2d(c, -c)).norm() < 1e-12);
  REQUIRE((chain.graph.edge_unit(3) - Eigen::Vector2d(c, c)).norm() < 1e-12);

  REQUIRE_THROWS_AS(build_diamond_chain(0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_diamond_chain(2, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_diamond_chain(2, 1.0, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("flux potentials integrate to the flux around every cell") {
  std::vector<double> overrides(8);
  SplitMix64 rng(31);
  for (double& l : overrides) l = 1.0 + 0.02 * (rng.uniform() - 0.5);
  const DiamondChain chain = build_diamond_chain(2, 1.0, overrides);
  const double flux = 0.73;
  const std::vector<double> a = diamond_flux_potentials(chain, flux);
  for (int c = 0; c < 2; ++c) {
    const double loop_integral =
        a[static_cast<std::size_t>(4 * c)] * chain.graph.edge_length(4 * c) +
        a[static_cast<std::size_t>(4 * c + 1)] * chain.graph.edge_length(4 * c + 1) -
        a[static_cast<std::size_t>(4 * c + 2)] * chain.graph.edge_length(4 * c + 2) -
        a[static_cast<std::size_t>(4 * c + 3)] * chain.graph.edge_length(4 * c + 3);
    REQUIRE(loop_integral == Catch::Approx(flux).epsilon(1e-14));
  }
}

TEST_CASE("a bare edge between two leads is perfectly transparent") {
  const MetricGraph g = interval_graph(1.0);
  for (double k : {0.4, 1.0, 2.7}) {
    const TransmissionResult res = transmission(g, RashbaParams{}, 0, 1, k);
    REQUIRE(res.total == Catch::Approx(2.0).margin(1e-10));
    REQUIRE(res.r.norm() < 1e-10);
    REQUIRE(res.unitarity_deficit < 1e-12);
  }
}

TEST_CASE("conductance is lead-symmetric at zero flux") {
  const DiamondChain chain = build_diamond_chain(3, 1.0);
  RashbaParams params;
  params.k_rashba = 0.7;
  for (double k : {0.9, 1.6}) {
    const double fwd =
        transmission(chain.graph, params, chain.left_vertex, chain.right_vertex, k).total;
    const double bwd =
        transmission(chain.graph, params, chain.right_vertex, chain.left_vertex, k).total;
    REQUIRE(fwd == Catch::Approx(bwd).margin(1e-10));
  }
}

TEST_CASE("the unfrustrated chain conducts") {
  const DiamondChain chain = build_diamond_chain(3, 1.0);
  REQUIRE(transmission(chain, 1.0, 0.0, 0.0).total > 0.1);
}

TEST_CASE("flux pi produces an exact Aharonov-Bohm cage") {
  const DiamondChain chain = build_diamond_chain(2, 1.0);
  for (double k : {0.8, 1.0, 1.3}) {
    REQUIRE(transmission(chain, k, 0.0, kPi).total < 1e-8);
  }
}

TEST_CASE("spin-orbit angle pi/2 produces an exact Rashba cage") {
  const DiamondChain chain = build_diamond_chain(2, 1.0);
  for (double k : {0.9, 1.7}) {
    REQUIRE(transmission(chain, k, kPi / 2.0, 0.0).total < 1e-8);
  }
}

TEST_CASE("transmission validates leads and wavenumber") {
  const MetricGraph g = interval_graph(1.0);
  REQUIRE_THROWS_AS(transmission(g, RashbaParams{}, 0, 1, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(transmission(g, RashbaParams{}, 0, 0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(transmission(g, RashbaParams{}, 0, 7, 1.0), std::invalid_argument);
  RashbaParams dir;
  dir.dirichlet = {true, false};
  REQUIRE_THROWS_AS(transmission(g, dir, 0, 1, 1.0), std::invalid_argument);
}

TEST_CASE("localization scan: ordering, averaging, determinism") {
  const DiamondChain chain = build_diamond_chain(2, 1.0);
  const std::vector<double> krs{0.0, 0.3};
  const std::vector<double> fluxes{0.0, 0.5};
  const auto pts = localization_scan(chain, krs, fluxes, 3);
  REQUIRE(pts.size() == 4);
  REQUIRE(pts[0].k_rashba == 0.0);
  REQUIRE(pts[0].flux == 0.0);
  REQUIRE(pts[1].k_rashba == 0.0);
  REQUIRE(pts[1].flux == 0.5);
  REQUIRE(pts[2].k_rashba == 0.3);
  REQUIRE(pts[2].flux == 0.0);
  REQUIRE(pts[3].k_rashba == 0.3);
  REQUIRE(pts[3].flux == 0.5);
  for (const auto& p : pts) REQUIRE(p.g_min <= p.g_mean + 1e-15);

  // midpoint wavenumber rule
  double mean = 0.0;
  for (int i = 0; i < 3; ++i) {
    mean += transmission(chain, (i + 0.5) * kPi / 3.0, 0.0, 0.0).total;
  }
  REQUIRE(pts[0].g_mean == Catch::Approx(mean / 3.0).epsilon(1e-14));

  const auto threaded = localization_scan(chain, krs, fluxes, 3, 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    REQUIRE(pts[i].g_mean == threaded[i].g_mean);
    REQUIRE(pts[i].g_min == threaded[i].g_min);
  }

  REQUIRE_THROWS_AS(localization_scan(chain, {}, fluxes, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(localization_scan(chain, krs, fluxes, 0), std::invalid_argument);
}

TEST_CASE("T3 band value reduces to cos^2 without couplings") {
  T3BandQuery q;
  q.energy = kPi * kPi / 9.0 - q.k_rashba * q.k_rashba;  // s = pi/3
  REQUIRE(t3_band_value(q) == Catch::Approx(0.25).margin(1e-12));
  q.energy = kPi * kPi - q.k_rashba * q.k_rashba;  // s = pi
  REQUIRE(t3_band_value(q) == Catch::Approx(1.0).margin(1e-12));

  T3BandQuery bad = q;
  bad.k_rashba = 1.0;
  REQUIRE_THROWS_AS(t3_band_value(bad), std::invalid_argument);
  bad = q;
  bad.omega = 0.3;
  REQUIRE_THROWS_AS(t3_band_value(bad), std::invalid_argument);
  bad = q;
  bad.k_rashba = 1.0;
  bad.enforce_regime = false;
  REQUIRE_NOTHROW(t3_band_value(bad));

  T3BandQuery evan;
  evan.k_rashba = 0.0;
  evan.energy = -1.0;
  evan.enforce_regime = false;
  REQUIRE_THROWS_AS(t3_band_value(evan), std::invalid_argument);

  T3BandQuery coupled;
  coupled.lambda = 1.0;
  coupled.energy = -0.5;  // E + k_R^2 > 0 but E <= 0
  REQUIRE_THROWS_AS(t3_band_value(coupled), std::invalid_argument);
}

TEST_CASE("T3 membership matches the direct cos^2 rule on a grid") {
  for (int i = 0; i < 500; ++i) {
    T3BandQuery q;
    q.energy = 0.1 + i * (40.0 - 0.1) / 499.0;
    const double s = std::sqrt(q.energy + q.k_rashba * q.k_rashba);
    const double v = std::cos(s) * std::cos(s);
    const bool expected = std::abs(std::sin(s)) <= 1e-12 ||
                          (v >= 0.0 && v <= 1.0 / 6.0) ||
                          std::abs(v - 1.0 / 3.0) <= 1e-12 ||
                          (v >= 0.5 && v <= 2.0 / 3.0) || std::abs(v - 1.0) <= 1e-12;
    REQUIRE(t3_in_spectrum(q) == expected);
  }

  // exact singleton and gap values
  T3BandQuery third;
  const double x_third = std::acos(1.0 / std::sqrt(3.0));
  third.energy = x_third * x_third - third.k_rashba * third.k_rashba;
  REQUIRE(t3_in_spectrum(third));
  T3BandQuery quarter;
  quarter.energy = kPi * kPi / 9.0 - quarter.k_rashba * quarter.k_rashba;
  REQUIRE_FALSE(t3_in_spectrum(quarter));
  T3BandQuery one;
  one.energy = kPi * kPi - one.k_rashba * one.k_rashba;
  REQUIRE(t3_in_spectrum(one));  // Neumann case admits band value 1
}

TEST_CASE("flat-band roots of the uncoupled lattice") {
  const auto roots = t3_flat_bands(0.0, 0.0, 0.0, 0.5, 43.0);
  const double r1 = std::acos(1.0 / std::sqrt(3.0));        // 0.9553166181245092
  const double r2 = std::acos(-1.0 / std::sqrt(3.0));       // 2.1862760354652844
  const std::vector<double> xs{r1, r2, r1 + kPi, r2 + kPi};
  REQUIRE(roots.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(roots[i] == Catch::Approx(xs[i] * xs[i]).margin(1e-9));
    T3BandQuery q;
    q.energy = roots[i];
    q.k_rashba = 0.0;
    q.enforce_regime = false;
    REQUIRE(std::abs(t3_band_value(q) - 1.0 / 3.0) < 1e-10);
  }
  REQUIRE(roots[0] == Catch::Approx(0.9553166181245092 * 0.9553166181245092).margin(1e-9));

  REQUIRE(t3_flat_bands(0.0, 0.0, 0.0, 0.70, 0.78).empty());
  REQUIRE_THROWS_AS(t3_flat_bands(0.0, 0.0, 0.5, 0.1, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(t3_flat_bands(0.0, 0.0, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("flat-band roots with couplings and integer spin-orbit strength") {
  // k_R = 1 shifts energies by -1 relative to the x roots
  const auto shifted = t3_flat_bands(0.0, 0.0, 1.0, -0.5, 42.0);
  const double r1 = std::acos(1.0 / std::sqrt(3.0));
  REQUIRE(shifted.size() == 4);
  REQUIRE(shifted[0] == Catch::Approx(r1 * r1 - 1.0).margin(1e-9));

  const auto coupled = t3_flat_bands(1.0, 1.0, 0.0, 0.1, 10.0);
  REQUIRE_FALSE(coupled.empty());
  for (double e : coupled) {
    T3BandQuery q;
    q.energy = e;
    q.lambda = 1.0;
    q.mu = 1.0;
    q.k_rashba = 0.0;
    q.enforce_regime = false;
    REQUIRE(std::abs(t3_band_value(q) - 1.0 / 3.0) < 1e-9);
  }
}
