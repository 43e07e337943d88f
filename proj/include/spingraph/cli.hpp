#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spingraph/core.hpp"
#include "spingraph/graph.hpp"
#include "spingraph/io.hpp"
#include "spingraph/lattice.hpp"
#include "spingraph/opspec.hpp"
#include "spingraph/orbits.hpp"
#include "spingraph/rashba.hpp"
#include "spingraph/rng.hpp"
#include "spingraph/secular.hpp"
#include "spingraph/stats.hpp"

namespace spingraph {
namespace cli_detail {

struct OutputOptions {
  std::string out_dir = ".";
  std::string format = "csv";
};

inline void add_output_options(CLI::App* cmd, OutputOptions* out) {
  cmd->add_option("--out-dir", out->out_dir, "output directory (created if missing)");
  cmd->add_option("--format", out->format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

inline std::string join_command(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

/// Writes the data table plus its manifest sidecar; returns the data path.
inline std::string emit(const OutputOptions& out, const std::string& name,
                        const OutputTable& table, RunManifest manifest,
                        std::chrono::steady_clock::time_point started) {
  std::filesystem::create_directories(out.out_dir);
  const std::string stem = (std::filesystem::path(out.out_dir) / name).string();
  const std::string content = out.format == "csv" ? table.to_csv() : table.to_json();
  const std::string data_path = stem + "." + out.format;
  write_text_file(data_path, content);
  manifest.outputs[data_path] = hash_hex(content);
  manifest.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_manifest(stem + ".manifest.json", manifest);
  return data_path;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  }
  return v;
}

/// Parses a "k,multiplicity" CSV produced by the spectrum command.
inline Spectrum read_spectrum_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "k,multiplicity") {
    throw std::invalid_argument("spectrum csv: expected header 'k,multiplicity' in " + path);
  }
  Spectrum sp;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("spectrum csv: malformed row '" + line + "'");
    }
    sp.k.push_back(std::stod(line.substr(0, comma)));
    sp.multiplicity.push_back(std::stoi(line.substr(comma + 1)));
    if (sp.multiplicity.back() < 1) {
      throw std::invalid_argument("spectrum csv: multiplicities must be >= 1");
    }
  }
  if (sp.k.empty()) throw std::invalid_argument("spectrum csv: no levels in " + path);
  if (!std::is_sorted(sp.k.begin(), sp.k.end())) {
    throw std::invalid_argument("spectrum csv: levels must be ascending");
  }
  sp.k_min = sp.k.front();
  sp.k_max = sp.k.back();
  return sp;
}

/// Kramers-lifts when every multiplicity is even, expands multiplicities,
/// and rescales empirically to unit mean spacing.
inline std::vector<double> unfold_from_file_spectrum(const Spectrum& input, bool* lifted) {
  Spectrum sp = input;
  const bool all_even =
      std::all_of(sp.multiplicity.begin(), sp.multiplicity.end(),
                  [](int m) { return m % 2 == 0; });
  if (all_even) sp = lift_kramers(sp);
  if (lifted) *lifted = all_even;
  std::vector<double> levels;
  for (std::size_t i = 0; i < sp.k.size(); ++i) {
    for (int m = 0; m < sp.multiplicity[i]; ++m) levels.push_back(sp.k[i]);
  }
  if (levels.size() < 2) throw std::invalid_argument("spectrum: need at least 2 levels");
  const double mean =
      (levels.back() - levels.front()) / static_cast<double>(levels.size() - 1);
  if (!(mean > 0.0)) throw std::invalid_argument("spectrum: degenerate level range");
  for (double& x : levels) x /= mean;
  return levels;
}

/// Shared flow for commands that build a k-independent bond operator
/// (orbit analyses): massless Dirac only.
inline BondScattering load_fixed_operator(const MetricGraph& g, const nlohmann::json& spec,
                                          std::optional<std::uint64_t> seed) {
  if (operator_spec_is_stochastic(spec) && !seed) {
    throw std::invalid_argument(
        "--seed is required: the operator spec draws Haar spin rotations");
  }
  if (parse_operator_kind(spec) != OperatorKind::kDirac || spec.value("mass", 0.0) != 0.0) {
    throw std::invalid_argument(
        "orbit analyses require a massless dirac operator (k-independent transitions)");
  }
  return build_bond_scattering(g, spec, seed.value_or(0));
}

}  // namespace cli_detail

/// Single-binary command-line front end.  Returns the process exit code:
/// 0 success, 2 validation failure, 3 numerical failure.
inline int run_cli(int argc, const char* const* argv) {
  using cli_detail::OutputOptions;
  const auto started = std::chrono::steady_clock::now();
  const std::string command_line = cli_detail::join_command(argc, argv);

  CLI::App app{"quantum graphs with spin Hamiltonians: spectra, statistics, orbits, lattices"};
  app.require_subcommand(1);

  // --- spectrum ---------------------------------------------------------
  struct {
    std::string graph, op;
    double kmin = 0.0, kmax = 0.0, tol = 1e-10, grid_step = 0.0;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    OutputOptions out;
  } sp;
  {
    auto* cmd = app.add_subcommand("spectrum", "secular-equation spectrum of a graph operator");
    cmd->add_option("--graph", sp.graph, "graph JSON file")->required();
    cmd->add_option("--operator", sp.op, "operator JSON file")->required();
    cmd->add_option("--kmin", sp.kmin, "lower end of the spectral parameter range")->required();
    cmd->add_option("--kmax", sp.kmax, "upper end of the spectral parameter range")->required();
    cmd->add_option("--tol", sp.tol, "root localization tolerance");
    cmd->add_option("--grid-step", sp.grid_step, "scan grid step (0: automatic)");
    cmd->add_option("--seed", sp.seed, "RNG seed (required for stochastic operator specs)");
    cmd->add_option("--threads", sp.threads, "worker threads")->check(CLI::PositiveNumber);
    cli_detail::add_output_options(cmd, &sp.out);
  }

  // --- stats ------------------------------------------------------------
  struct {
    std::string spectrum;
    std::string ensemble = "gse";
    int bins = 40;
    OutputOptions out;
  } st;
  {
    auto* cmd = app.add_subcommand("stats", "nearest-neighbor spacing statistics vs GOE/GSE");
    cmd->add_option("--spectrum", st.spectrum, "spectrum CSV (k,multiplicity)")->required();
    cmd->add_option("--ensemble", st.ensemble, "ensemble emphasized in the summary")
        ->check(CLI::IsMember({"goe", "gse"}));
    cmd->add_option("--bins", st.bins, "histogram bins on [0, 4]")->check(CLI::PositiveNumber);
    cli_detail::add_output_options(cmd, &st.out);
  }

  // --- orbits -----------------------------------------------------------
  struct {
    std::string graph, op;
    int nmax = 10;
    long long walk_cap = 5'000'000;
    bool no_prune = false;
    std::optional<std::uint64_t> seed;
    OutputOptions out;
  } orb;
  {
    auto* cmd = app.add_subcommand("orbits", "periodic-orbit table with spin weights");
    cmd->add_option("--graph", orb.graph, "graph JSON file")->required();
    cmd->add_option("--operator", orb.op, "operator JSON file (massless dirac)")->required();
    cmd->add_option("--nmax", orb.nmax, "maximum orbit steps")->check(CLI::PositiveNumber);
    cmd->add_option("--walk-cap", orb.walk_cap, "abort threshold on closed-walk count");
    cmd->add_flag("--no-prune", orb.no_prune, "keep zero-amplitude transitions");
    cmd->add_option("--seed", orb.seed, "RNG seed (required for stochastic operator specs)");
    cli_detail::add_output_options(cmd, &orb.out);
  }

  // --- formfactor ---------------------------------------------------------
  struct {
    std::string graph, op, spectrum;
    int nmax = 10;
    long long walk_cap = 5'000'000;
    double tau_max = 1.0;
    int tau_bins = 200;
    int windows = 16;
    bool laplace = false;
    std::optional<std::uint64_t> seed;
    OutputOptions out;
  } ff;
  {
    auto* cmd = app.add_subcommand(
        "formfactor", "spectral form factor: orbit sum (--graph) or spectrum estimate "
                      "(--spectrum)");
    cmd->add_option("--graph", ff.graph, "graph JSON file (orbit-sum mode)");
    cmd->add_option("--operator", ff.op, "operator JSON file (orbit-sum mode)");
    cmd->add_option("--spectrum", ff.spectrum, "spectrum CSV (estimator mode)");
    cmd->add_option("--nmax", ff.nmax, "maximum orbit steps")->check(CLI::PositiveNumber);
    cmd->add_option("--walk-cap", ff.walk_cap, "abort threshold on closed-walk count");
    cmd->add_option("--tau-max", ff.tau_max, "upper end of the tau grid")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tau-bins", ff.tau_bins, "tau grid size")->check(CLI::PositiveNumber);
    cmd->add_option("--windows", ff.windows, "spectral windows (estimator mode)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--laplace", ff.laplace, "spin-blind weights (drop the holonomy trace)");
    cmd->add_option("--seed", ff.seed, "RNG seed (required for stochastic operator specs)");
    cli_detail::add_output_options(cmd, &ff.out);
  }

  // --- rashba-bands -------------------------------------------------------
  struct {
    double lambda = 0.0, mu = 0.0;
    double k_rashba = kPi / 2.0;
    double omega = -kPi / 6.0;
    double emin = 0.0, emax = 0.0;
    int samples = 10000;
    OutputOptions out;
  } rb;
  {
    auto* cmd = app.add_subcommand("rashba-bands", "closed-form T3 band conditions");
    cmd->add_option("--lambda", rb.lambda, "coupling at valency-6 vertices");
    cmd->add_option("--mu", rb.mu, "coupling at valency-3 vertices");
    cmd->add_option("--k-rashba", rb.k_rashba, "Rashba coupling (regime: cos k_R = 0)");
    cmd->add_option("--omega", rb.omega, "flux parameter (regime: -pi/6 + pi Z)");
    cmd->add_option("--emin", rb.emin, "lower end of the energy grid (exclusive)");
    cmd->add_option("--emax", rb.emax, "upper end of the energy grid (inclusive)")->required();
    cmd->add_option("--samples", rb.samples, "energy grid size")->check(CLI::PositiveNumber);
    cli_detail::add_output_options(cmd, &rb.out);
  }

  // --- transmission -------------------------------------------------------
  struct {
    int cells = 50;
    double length = 1.0;
    double kr_min = 0.0, kr_max = kPi, flux_min = 0.0, flux_max = 0.0;
    int kr_steps = 41, flux_steps = 1, k_samples = 20;
    double perturb = 0.0;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    OutputOptions out;
  } tr;
  {
    auto* cmd = app.add_subcommand("transmission", "diamond-chain conductance sweep");
    cmd->add_option("--cells", tr.cells, "number of rhombi")->check(CLI::PositiveNumber);
    cmd->add_option("--length", tr.length, "nominal edge length")->check(CLI::PositiveNumber);
    cmd->add_option("--kr-min", tr.kr_min, "Rashba coupling grid start");
    cmd->add_option("--kr-max", tr.kr_max, "Rashba coupling grid end");
    cmd->add_option("--kr-steps", tr.kr_steps, "Rashba coupling grid size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--flux-min", tr.flux_min, "flux grid start");
    cmd->add_option("--flux-max", tr.flux_max, "flux grid end");
    cmd->add_option("--flux-steps", tr.flux_steps, "flux grid size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--k-samples", tr.k_samples, "wavenumbers averaged per grid point")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--perturb", tr.perturb,
                    "relative edge-length perturbation amplitude (stochastic)");
    cmd->add_option("--seed", tr.seed, "RNG seed (required with --perturb)");
    cmd->add_option("--threads", tr.threads, "worker threads")->check(CLI::PositiveNumber);
    cli_detail::add_output_options(cmd, &tr.out);
  }

  // --- haar-average -------------------------------------------------------
  struct {
    int m = 1;
    long long samples = 1'000'000;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string ensemble = "haar";
    OutputOptions out;
  } ha;
  {
    auto* cmd = app.add_subcommand("haar-average", "Monte Carlo SU(2) pair-trace averages");
    cmd->add_option("--m", ha.m, "repetition order (1 or 2)")->required();
    cmd->add_option("--samples", ha.samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", ha.seed, "RNG seed")->required();
    cmd->add_option("--threads", ha.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--ensemble", ha.ensemble, "spin-rotation ensemble")
        ->check(CLI::IsMember({"haar", "identity"}));
    cli_detail::add_output_options(cmd, &ha.out);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("spectrum")) {
      const std::string graph_text = read_text_file(sp.graph);
      const std::string op_text = read_text_file(sp.op);
      const MetricGraph g = MetricGraph::from_json(nlohmann::json::parse(graph_text));
      const nlohmann::json spec = nlohmann::json::parse(op_text);
      if (operator_spec_is_stochastic(spec) && !sp.seed) {
        throw std::invalid_argument(
            "--seed is required: the operator spec draws Haar spin rotations");
      }
      OutputTable table({"k", "multiplicity"});
      if (parse_operator_kind(spec) == OperatorKind::kRashba) {
        if (sp.kmin < 0.0) {
          throw std::invalid_argument("spectrum: rashba runs use E = k^2, so kmin >= 0");
        }
        const RashbaParams params = build_rashba_params(g, spec);
        RashbaScanOptions options;
        options.tol = sp.tol;
        options.grid_step = sp.grid_step;
        options.threads = sp.threads;
        const RashbaSpectrum rs =
            rashba_spectrum(g, params, sp.kmin * sp.kmin, sp.kmax * sp.kmax, options);
        for (std::size_t i = 0; i < rs.energy.size(); ++i) {
          table.add_row({std::sqrt(rs.energy[i]), rs.multiplicity[i]});
        }
      } else {
        const BondScattering bs = build_bond_scattering(g, spec, sp.seed.value_or(0));
        ScanOptions options;
        options.tol = sp.tol;
        options.grid_step = sp.grid_step;
        options.threads = sp.threads;
        const Spectrum spectrum = find_spectrum(bs, sp.kmin, sp.kmax, options);
        for (std::size_t i = 0; i < spectrum.k.size(); ++i) {
          table.add_row({spectrum.k[i], spectrum.multiplicity[i]});
        }
      }
      RunManifest manifest;
      manifest.command = command_line;
      manifest.inputs[sp.graph] = hash_hex(graph_text);
      manifest.inputs[sp.op] = hash_hex(op_text);
      manifest.operator_spec = spec;
      manifest.tolerances = {{"tol", sp.tol}, {"grid_step", sp.grid_step}};
      manifest.seed = sp.seed;
      manifest.summary = {{"rows", table.row_count()}};
      cli_detail::emit(sp.out, "spectrum", table, std::move(manifest), started);
      return 0;
    }

    if (app.got_subcommand("stats")) {
      const Spectrum input = cli_detail::read_spectrum_csv(st.spectrum);
      if (input.total_levels() < 100) {
        throw std::invalid_argument("stats: need at least 100 levels, got " +
                                    std::to_string(input.total_levels()));
      }
      bool lifted = false;
      const std::vector<double> unfolded =
          cli_detail::unfold_from_file_spectrum(input, &lifted);
      const SpacingSample sample = nns_statistics(unfolded, st.bins);
      const double ks_goe = ks_distance(sample, Ensemble::kGOE);
      const double ks_gse = ks_distance(sample, Ensemble::kGSE);
      OutputTable table({"s", "hist", "cdf_emp", "cdf_goe", "cdf_gse"});
      for (std::size_t i = 0; i < sample.bin_centers.size(); ++i) {
        const double s = sample.bin_centers[i];
        table.add_row({s, sample.hist[i], sample.cdf_emp[i], rmt_cdf(Ensemble::kGOE, s),
                       rmt_cdf(Ensemble::kGSE, s)});
      }
      std::cout << "levels=" << unfolded.size() << (lifted ? " (kramers-lifted)" : "")
                << " ks_goe=" << format_double(ks_goe)
                << " ks_gse=" << format_double(ks_gse) << "\n";
      RunManifest manifest;
      manifest.command = command_line;
      manifest.inputs[st.spectrum] = hash_hex(read_text_file(st.spectrum));
      manifest.tolerances = {{"bins", st.bins}};
      manifest.summary = {{"levels", unfolded.size()},
                          {"kramers_lifted", lifted},
                          {"ensemble", st.ensemble},
                          {"ks_goe", ks_goe},
                          {"ks_gse", ks_gse}};
      cli_detail::emit(st.out, "stats", table, std::move(manifest), started);
      return 0;
    }

    if (app.got_subcommand("orbits")) {
      const std::string graph_text = read_text_file(orb.graph);
      const std::string op_text = read_text_file(orb.op);
      const MetricGraph g = MetricGraph::from_json(nlohmann::json::parse(graph_text));
      const nlohmann::json spec = nlohmann::json::parse(op_text);
      const BondScattering bs = cli_detail::load_fixed_operator(g, spec, orb.seed);
      const Eigen::MatrixXcd transition = bs.bond_transition(1.0);
      OrbitEnumerationOptions options;
      options.walk_cap = orb.walk_cap;
      if (!orb.no_prune) options.prune_transitions = &transition;
      const std::vector<PeriodicOrbit> orbits = enumerate_orbits(g, orb.nmax, options);
      OutputTable table({"n", "l_p", "r_p", "A_p", "tr_d_re"});
      for (const auto& p : orbits) {
        const OrbitWeight w = orbit_weight(p, transition);
        table.add_row({p.steps(), p.length, p.repetition, w.amplitude, w.trace()});
      }
      RunManifest manifest;
      manifest.command = command_line;
      manifest.inputs[orb.graph] = hash_hex(graph_text);
      manifest.inputs[orb.op] = hash_hex(op_text);
      manifest.operator_spec = spec;
      manifest.tolerances = {{"walk_cap", orb.walk_cap}, {"pruned", !orb.no_prune}};
      manifest.seed = orb.seed;
      manifest.summary = {{"orbits", table.row_count()}, {"n_max", orb.nmax}};
      cli_detail::emit(orb.out, "orbits", table, std::move(manifest), started);
      return 0;
    }

    if (app.got_subcommand("formfactor")) {
      const bool orbit_mode = !ff.graph.empty() || !ff.op.empty();
      const bool estimator_mode = !ff.spectrum.empty();
      if (orbit_mode == estimator_mode) {
        throw std::invalid_argument(
            "formfactor: pass either --graph/--operator or --spectrum");
      }
      std::vector<double> tau(static_cast<std::size_t>(ff.tau_bins));
      for (int i = 0; i < ff.tau_bins; ++i) {
        tau[static_cast<std::size_t>(i)] = (i + 0.5) * ff.tau_max / ff.tau_bins;
      }
      RunManifest manifest;
      manifest.command = command_line;
      manifest.seed = ff.seed;
      if (orbit_mode) {
        if (ff.graph.empty() || ff.op.empty()) {
          throw std::invalid_argument("formfactor: orbit mode needs --graph and --operator");
        }
        const std::string graph_text = read_text_file(ff.graph);
        const std::string op_text = read_text_file(ff.op);
        const MetricGraph g = MetricGraph::from_json(nlohmann::json::parse(graph_text));
        const nlohmann::json spec = nlohmann::json::parse(op_text);
        const BondScattering bs = cli_detail::load_fixed_operator(g, spec, ff.seed);
        const Eigen::MatrixXcd transition = bs.bond_transition(1.0);
        OrbitEnumerationOptions options;
        options.walk_cap = ff.walk_cap;
        options.prune_transitions = &transition;
        const std::vector<PeriodicOrbit> orbits = enumerate_orbits(g, ff.nmax, options);
        std::vector<OrbitWeight> weights;
        weights.reserve(orbits.size());
        for (const auto& p : orbits) weights.push_back(orbit_weight(p, transition));
        const std::vector<double> k_values = form_factor_orbit_sum(
            orbits, weights, g.total_length(), tau, 1e-9,
            ff.laplace ? FormFactorKind::kLaplace : FormFactorKind::kDirac);
        OutputTable table({"tau", "K"});
        for (std::size_t i = 0; i < tau.size(); ++i) table.add_row({tau[i], k_values[i]});
        manifest.inputs[ff.graph] = hash_hex(graph_text);
        manifest.inputs[ff.op] = hash_hex(op_text);
        manifest.operator_spec = spec;
        manifest.tolerances = {{"walk_cap", ff.walk_cap}, {"length_tolerance", 1e-9}};
        manifest.summary = {{"orbits", orbits.size()}, {"n_max", ff.nmax}};
        cli_detail::emit(ff.out, "formfactor", table, std::move(manifest), started);
        return 0;
      }
      const Spectrum input = cli_detail::read_spectrum_csv(ff.spectrum);
      bool lifted = false;
      const std::vector<double> unfolded =
          cli_detail::unfold_from_file_spectrum(input, &lifted);
      const FormFactorEstimate est = form_factor_from_spectrum(unfolded, tau, ff.windows);
      OutputTable table({"tau", "K_emp", "K_gse_series", "K_goe_series"});
      for (std::size_t i = 0; i < tau.size(); ++i) {
        const double gse = tau[i] < 1.0 ? rmt_series(Ensemble::kGSE, tau[i]) :
                                          std::numeric_limits<double>::quiet_NaN();
        const double goe = tau[i] < 1.0 ? rmt_series(Ensemble::kGOE, tau[i]) :
                                          std::numeric_limits<double>::quiet_NaN();
        table.add_row({tau[i], est.value[i], gse, goe});
      }
      manifest.inputs[ff.spectrum] = hash_hex(read_text_file(ff.spectrum));
      manifest.tolerances = {{"windows", ff.windows}};
      manifest.summary = {{"levels", unfolded.size()}, {"kramers_lifted", lifted}};
      cli_detail::emit(ff.out, "formfactor", table, std::move(manifest), started);
      return 0;
    }

    if (app.got_subcommand("rashba-bands")) {
      OutputTable table({"E", "band_value", "in_spectrum"});
      long long members = 0;
      for (int i = 0; i < rb.samples; ++i) {
        T3BandQuery q;
        q.energy = rb.emin + (i + 1) * (rb.emax - rb.emin) / rb.samples;
        q.lambda = rb.lambda;
        q.mu = rb.mu;
        q.k_rashba = rb.k_rashba;
        q.omega = rb.omega;
        const double value = t3_band_value(q);
        const bool member = t3_in_spectrum(q);
        members += member ? 1 : 0;
        table.add_row({q.energy, value, member ? 1 : 0});
      }
      std::cout << "grid=" << rb.samples << " in_spectrum=" << members << "\n";
      RunManifest manifest;
      manifest.command = command_line;
      manifest.tolerances = {{"singleton_tol", 1e-12}};
      manifest.summary = {{"lambda", rb.lambda},   {"mu", rb.mu},
                          {"k_rashba", rb.k_rashba}, {"omega", rb.omega},
                          {"grid", rb.samples},    {"in_spectrum", members}};
      cli_detail::emit(rb.out, "bands", table, std::move(manifest), started);
      return 0;
    }

    if (app.got_subcommand("transmission")) {
      std::vector<double> overrides;
      if (tr.perturb != 0.0) {
        if (!tr.seed) {
          throw std::invalid_argument("--seed is required with --perturb");
        }
        SplitMix64 rng(*tr.seed);
        overrides.resize(static_cast<std::size_t>(4 * tr.cells));
        for (double& len : overrides) {
          len = tr.length * (1.0 + tr.perturb * (2.0 * rng.uniform() - 1.0));
        }
      }
      const DiamondChain chain = build_diamond_chain(tr.cells, tr.length, overrides);
      const std::vector<double> kr_grid =
          cli_detail::linspace(tr.kr_min, tr.kr_max, tr.kr_steps);
      const std::vector<double> flux_grid =
          cli_detail::linspace(tr.flux_min, tr.flux_max, tr.flux_steps);
      const std::vector<LocalizationPoint> map =
          localization_scan(chain, kr_grid, flux_grid, tr.k_samples, tr.threads);
      OutputTable table({"k_R", "flux", "G_mean", "G_min"});
      const LocalizationPoint* best = &map.front();
      for (const auto& p : map) {
        table.add_row({p.k_rashba, p.flux, p.g_mean, p.g_min});
        if (p.g_mean < best->g_mean) best = &p;
      }
      std::cout << "minimum mean G=" << format_double(best->g_mean)
                << " at k_R=" << format_double(best->k_rashba)
                << " flux=" << format_double(best->flux) << "\n";
      RunManifest manifest;
      manifest.command = command_line;
      manifest.tolerances = {{"unitarity_tol", 1e-8}};
      manifest.seed = tr.seed;
      manifest.summary = {{"cells", tr.cells},
                          {"length", tr.length},
                          {"k_samples", tr.k_samples},
                          {"perturb", tr.perturb},
                          {"min_g_mean", best->g_mean},
                          {"argmin_k_R", best->k_rashba},
                          {"argmin_flux", best->flux}};
      cli_detail::emit(tr.out, "sweep", table, std::move(manifest), started);
      return 0;
    }

    if (app.got_subcommand("haar-average")) {
      const SpinEnsemble ensemble =
          ha.ensemble == "identity" ? SpinEnsemble::kIdentity : SpinEnsemble::kHaar;
      const MonteCarloEstimate est =
          haar_pair_average(ha.m, ha.samples, ha.seed, ha.threads, ensemble);
      OutputTable table({"m", "mean", "std_error", "samples"});
      table.add_row({ha.m, est.mean, est.std_error, est.samples});
      std::cout << "m=" << ha.m << " mean=" << format_double(est.mean)
                << " std_error=" << format_double(est.std_error) << "\n";
      RunManifest manifest;
      manifest.command = command_line;
      manifest.seed = ha.seed;
      manifest.tolerances = nlohmann::json::object();
      manifest.summary = {{"m", ha.m},
                          {"ensemble", ha.ensemble},
                          {"mean", est.mean},
                          {"std_error", est.std_error}};
      cli_detail::emit(ha.out, "haar", table, std::move(manifest), started);
      return 0;
    }

    throw std::invalid_argument("no subcommand selected");
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace spingraph
