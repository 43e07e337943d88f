#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spingraph/core.hpp"
#include "spingraph/graph.hpp"
#include "spingraph/matching.hpp"
#include "spingraph/rashba.hpp"
#include "spingraph/rng.hpp"
#include "spingraph/secular.hpp"
#include "spingraph/su2.hpp"

namespace spingraph {

enum class OperatorKind { kDirac, kPauli, kRashba };

inline OperatorKind parse_operator_kind(const nlohmann::json& spec) {
  if (!spec.contains("operator")) {
    throw std::invalid_argument("operator spec: missing 'operator' field");
  }
  const std::string name = spec.at("operator").get<std::string>();
  if (name == "dirac") return OperatorKind::kDirac;
  if (name == "pauli") return OperatorKind::kPauli;
  if (name == "rashba") return OperatorKind::kRashba;
  throw std::invalid_argument("operator spec: unknown operator '" + name + "'");
}

/// True if building the operator consumes random numbers (Haar-sampled spin
/// rotations), in which case a seed must be supplied explicitly.
inline bool operator_spec_is_stochastic(const nlohmann::json& spec) {
  if (!spec.contains("vertex_conditions")) return false;
  for (const auto& vc : spec.at("vertex_conditions")) {
    if (vc.contains("spin_rotations") && vc.at("spin_rotations").is_string() &&
        vc.at("spin_rotations").get<std::string>() == "haar") {
      return true;
    }
  }
  return false;
}

namespace detail {

inline Complex json_complex(const nlohmann::json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2) {
    return Complex(j.at(0).get<double>(), j.at(1).get<double>());
  }
  throw std::invalid_argument("operator spec: complex entries are numbers or [re, im]");
}

inline Eigen::MatrixXcd json_matrix(const nlohmann::json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw std::invalid_argument("operator spec: matrix must have " + std::to_string(dim) +
                                " rows");
  }
  Eigen::MatrixXcd m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw std::invalid_argument("operator spec: matrix rows must have " +
                                  std::to_string(dim) + " entries");
    }
    for (int c = 0; c < dim; ++c) m(r, c) = json_complex(row.at(static_cast<std::size_t>(c)));
  }
  return m;
}

/// Per-vertex condition entries keyed by vertex id; validates ids.
inline std::map<int, nlohmann::json> vertex_condition_map(const MetricGraph& g,
                                                          const nlohmann::json& spec) {
  std::map<int, nlohmann::json> out;
  if (!spec.contains("vertex_conditions")) return out;
  for (const auto& vc : spec.at("vertex_conditions")) {
    if (!vc.contains("vertex")) {
      throw std::invalid_argument("operator spec: vertex condition without 'vertex' id");
    }
    const int id = vc.at("vertex").get<int>();
    g.vertex_index(id);  // throws on unknown id
    if (!out.emplace(id, vc).second) {
      throw std::invalid_argument("operator spec: duplicate condition for vertex " +
                                  std::to_string(id));
    }
  }
  return out;
}

}  // namespace detail

/// Matching conditions for a Dirac/Pauli run.  Unlisted vertices default to
/// Neumann-like conditions with identity spin rotations.  Haar-sampled
/// rotations ("spin_rotations": "haar") are drawn deterministically from the
/// seed: vertices in ascending index order, ends in ascending order.
inline std::vector<MatchingConditions> build_matching_conditions(const MetricGraph& g,
                                                                 const nlohmann::json& spec,
                                                                 std::uint64_t seed) {
  const auto by_id = detail::vertex_condition_map(g, spec);
  SplitMix64 rng(seed);
  std::vector<MatchingConditions> conditions;
  conditions.reserve(static_cast<std::size_t>(g.num_vertices()));
  for (int v = 0; v < g.num_vertices(); ++v) {
    const int d = g.degree(v);
    const auto it = by_id.find(g.vertex_id(v));
    std::string type = "neumann";
    nlohmann::json vc;
    if (it != by_id.end()) {
      vc = it->second;
      type = vc.value("type", std::string("neumann"));
    }
    if (type == "dirichlet") {
      conditions.push_back(dirichlet_conditions(d));
      continue;
    }
    if (type == "custom") {
      MatchingConditions mc;
      mc.A = detail::json_matrix(vc.at("A"), 2 * d);
      mc.B = detail::json_matrix(vc.at("B"), 2 * d);
      conditions.push_back(std::move(mc));
      continue;
    }
    if (type != "neumann") {
      throw std::invalid_argument("operator spec: vertex type '" + type +
                                  "' is not valid for dirac/pauli operators");
    }
    std::vector<SU2> us(static_cast<std::size_t>(d), SU2::Identity());
    if (!vc.is_null() && vc.contains("spin_rotations")) {
      const auto& rot = vc.at("spin_rotations");
      if (rot.is_string() && rot.get<std::string>() == "haar") {
        for (auto& u : us) u = haar_su2(rng);
      } else if (rot.is_array()) {
        if (static_cast<int>(rot.size()) != d) {
          throw std::invalid_argument("operator spec: need one spin rotation per edge end");
        }
        for (int j = 0; j < d; ++j) {
          const auto& q = rot.at(static_cast<std::size_t>(j));
          if (!q.is_array() || q.size() != 4) {
            throw std::invalid_argument("operator spec: spin rotations are 4 reals each");
          }
          us[static_cast<std::size_t>(j)] =
              su2_from_quaternion(q.at(0).get<double>(), q.at(1).get<double>(),
                                  q.at(2).get<double>(), q.at(3).get<double>());
        }
      } else {
        throw std::invalid_argument("operator spec: spin_rotations is \"haar\" or an array");
      }
    }
    conditions.push_back(neumann_like_conditions(us));
  }
  return conditions;
}

/// Bond-scattering operator (Dirac or Pauli) from a JSON operator spec.
inline BondScattering build_bond_scattering(const MetricGraph& g, const nlohmann::json& spec,
                                            std::uint64_t seed) {
  const OperatorKind kind = parse_operator_kind(spec);
  if (kind == OperatorKind::kRashba) {
    throw std::invalid_argument(
        "operator spec: rashba operators use the vertex linear system, not bond scattering");
  }
  auto conditions = build_matching_conditions(g, spec, seed);
  if (kind == OperatorKind::kDirac) {
    const double mass = spec.value("mass", 0.0);
    if (mass < 0.0) throw std::invalid_argument("operator spec: mass must be >= 0");
    return BondScattering::dirac(g, std::move(conditions), mass);
  }
  std::vector<Eigen::Vector3d> fields(static_cast<std::size_t>(g.num_edges()),
                                      Eigen::Vector3d::Zero());
  if (spec.contains("edge_fields")) {
    const auto& jf = spec.at("edge_fields");
    if (static_cast<int>(jf.size()) != g.num_edges()) {
      throw std::invalid_argument("operator spec: need one edge field per edge");
    }
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto& f = jf.at(static_cast<std::size_t>(e));
      if (!f.is_array() || f.size() != 3) {
        throw std::invalid_argument("operator spec: edge fields are [Bx, By, Bz]");
      }
      fields[static_cast<std::size_t>(e)] = Eigen::Vector3d(
          f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>());
    }
  }
  return BondScattering::pauli(g, std::move(conditions), std::move(fields));
}

/// Rashba parameters from a JSON operator spec.  Vertex conditions accept
/// types "neumann" (epsilon = 0, default), "delta" (with "epsilon"), and
/// "dirichlet"; edge potentials default to zero.
inline RashbaParams build_rashba_params(const MetricGraph& g, const nlohmann::json& spec) {
  if (parse_operator_kind(spec) != OperatorKind::kRashba) {
    throw std::invalid_argument("operator spec: expected a rashba operator");
  }
  RashbaParams params;
  params.k_rashba = spec.value("k_rashba", 0.0);
  params.vertex_coupling.assign(static_cast<std::size_t>(g.num_vertices()), 0.0);
  params.dirichlet.assign(static_cast<std::size_t>(g.num_vertices()), false);
  if (spec.contains("edge_potentials")) {
    const auto& jp = spec.at("edge_potentials");
    if (static_cast<int>(jp.size()) != g.num_edges()) {
      throw std::invalid_argument("operator spec: need one edge potential per edge");
    }
    params.edge_potentials.resize(static_cast<std::size_t>(g.num_edges()));
    for (int e = 0; e < g.num_edges(); ++e) {
      params.edge_potentials[static_cast<std::size_t>(e)] =
          jp.at(static_cast<std::size_t>(e)).get<double>();
    }
  }
  const auto by_id = detail::vertex_condition_map(g, spec);
  for (const auto& [id, vc] : by_id) {
    const int v = g.vertex_index(id);
    const std::string type = vc.value("type", std::string("neumann"));
    if (type == "neumann") {
      continue;
    } else if (type == "delta") {
      params.vertex_coupling[static_cast<std::size_t>(v)] = vc.value("epsilon", 0.0);
    } else if (type == "dirichlet") {
      params.dirichlet[static_cast<std::size_t>(v)] = true;
    } else {
      throw std::invalid_argument("operator spec: vertex type '" + type +
                                  "' is not valid for rashba operators");
    }
  }
  return params;
}

}  // namespace spingraph
