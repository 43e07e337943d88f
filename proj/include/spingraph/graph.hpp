#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spingraph/core.hpp"

namespace spingraph {

struct VertexSpec {
  int id = 0;
  std::optional<std::array<double, 2>> position;
};

struct EdgeSpec {
  int id = 0;
  int from = 0;  // vertex id
  int to = 0;    // vertex id
  double length = 0.0;
};

/// A compact metric graph: finite vertex and edge sets, each edge e carrying
/// a coordinate x_e in [0, length_e] that runs from the tail (end 0) to the
/// head (end 1).  Each edge induces two directed bonds, indexed
///
///   bond 2e   : tail -> head (forward)
///   bond 2e+1 : head -> tail (reversed)
///
/// so that reversal is bond ^ 1 and the bond order is deterministic.
/// Loops (tail == head) are permitted; incidence is therefore tracked per
/// edge *end*, not per edge, and a loop contributes two ends to its vertex.
class MetricGraph {
 public:
  struct EndRef {
    int edge = 0;
    int end = 0;  // 0: x = 0 side, 1: x = length side
    friend bool operator==(const EndRef& a, const EndRef& b) {
      return a.edge == b.edge && a.end == b.end;
    }
  };

  MetricGraph(std::vector<VertexSpec> vertices, std::vector<EdgeSpec> edges) {
    if (vertices.empty()) throw std::invalid_argument("graph: no vertices");
    if (edges.empty()) throw std::invalid_argument("graph: no edges");

    std::map<int, int> vertex_index;
    for (const auto& v : vertices) {
      if (!vertex_index.emplace(v.id, static_cast<int>(vertex_ids_.size())).second) {
        throw std::invalid_argument("graph: duplicate vertex id " + std::to_string(v.id));
      }
      vertex_ids_.push_back(v.id);
      positions_.push_back(v.position);
    }

    std::map<int, bool> edge_seen;
    for (const auto& e : edges) {
      if (edge_seen[e.id]) {
        throw std::invalid_argument("graph: duplicate edge id " + std::to_string(e.id));
      }
      edge_seen[e.id] = true;
      auto it_from = vertex_index.find(e.from);
      auto it_to = vertex_index.find(e.to);
      if (it_from == vertex_index.end() || it_to == vertex_index.end()) {
        throw std::invalid_argument("graph: edge " + std::to_string(e.id) +
                                    " references unknown vertex");
      }
      if (!(e.length > 0.0) || !std::isfinite(e.length)) {
        throw std::invalid_argument("graph: edge " + std::to_string(e.id) +
                                    " must have positive finite length");
      }
      edge_ids_.push_back(e.id);
      tail_.push_back(it_from->second);
      head_.push_back(it_to->second);
      length_.push_back(e.length);
    }

    ends_at_.resize(vertex_ids_.size());
    for (int e = 0; e < num_edges(); ++e) {
      ends_at_[tail_[e]].push_back({e, 0});
      ends_at_[head_[e]].push_back({e, 1});
    }
    for (auto& ends : ends_at_) {
      std::sort(ends.begin(), ends.end(), [](const EndRef& a, const EndRef& b) {
        return a.edge != b.edge ? a.edge < b.edge : a.end < b.end;
      });
    }
    for (std::size_t v = 0; v < ends_at_.size(); ++v) {
      if (ends_at_[v].empty()) {
        throw std::invalid_argument("graph: isolated vertex id " +
                                    std::to_string(vertex_ids_[v]));
      }
    }
    if (!connected()) throw std::invalid_argument("graph: not connected");
  }

  static MetricGraph from_json(const nlohmann::json& j) {
    if (!j.contains("vertices") || !j.contains("edges")) {
      throw std::invalid_argument("graph json: expected 'vertices' and 'edges' arrays");
    }
    std::vector<VertexSpec> vs;
    for (const auto& jv : j.at("vertices")) {
      VertexSpec v;
      v.id = jv.at("id").get<int>();
      if (jv.contains("x") && jv.contains("y")) {
        v.position = {{jv.at("x").get<double>(), jv.at("y").get<double>()}};
      }
      vs.push_back(v);
    }
    std::vector<EdgeSpec> es;
    for (const auto& je : j.at("edges")) {
      EdgeSpec e;
      e.id = je.at("id").get<int>();
      e.from = je.at("from").get<int>();
      e.to = je.at("to").get<int>();
      e.length = je.at("length").get<double>();
      es.push_back(e);
    }
    return MetricGraph(std::move(vs), std::move(es));
  }

  int num_vertices() const { return static_cast<int>(vertex_ids_.size()); }
  int num_edges() const { return static_cast<int>(edge_ids_.size()); }
  int num_bonds() const { return 2 * num_edges(); }

  int vertex_id(int v) const { return vertex_ids_.at(v); }
  int edge_id(int e) const { return edge_ids_.at(e); }

  /// Dense index of the vertex with external id `id`.
  int vertex_index(int id) const {
    for (int v = 0; v < num_vertices(); ++v) {
      if (vertex_ids_[v] == id) return v;
    }
    throw std::invalid_argument("graph: unknown vertex id " + std::to_string(id));
  }
  int edge_index(int id) const {
    for (int e = 0; e < num_edges(); ++e) {
      if (edge_ids_[e] == id) return e;
    }
    throw std::invalid_argument("graph: unknown edge id " + std::to_string(id));
  }

  int edge_tail(int e) const { return tail_.at(e); }
  int edge_head(int e) const { return head_.at(e); }
  double edge_length(int e) const { return length_.at(e); }

  double total_length() const {
    double s = 0.0;
    for (double l : length_) s += l;
    return s;
  }
  double min_edge_length() const {
    return *std::min_element(length_.begin(), length_.end());
  }

  static int bond_edge(int b) { return b >> 1; }
  static bool bond_is_forward(int b) { return (b & 1) == 0; }
  static int bond_reverse(int b) { return b ^ 1; }

  double bond_length(int b) const { return length_.at(bond_edge(b)); }
  int bond_tail(int b) const {
    return bond_is_forward(b) ? tail_[bond_edge(b)] : head_[bond_edge(b)];
  }
  int bond_head(int b) const {
    return bond_is_forward(b) ? head_[bond_edge(b)] : tail_[bond_edge(b)];
  }
  /// Edge end through which bond b leaves its tail vertex.
  EndRef bond_departure_end(int b) const { return {bond_edge(b), b & 1}; }
  /// Edge end through which bond b arrives at its head vertex.
  EndRef bond_arrival_end(int b) const { return {bond_edge(b), 1 - (b & 1)}; }

  /// Edge ends incident to v, sorted by (edge, end).  Its size is the vertex
  /// degree d_v; local matching conditions are expressed in this order.
  const std::vector<EndRef>& ends_at(int v) const { return ends_at_.at(v); }
  int degree(int v) const { return static_cast<int>(ends_at_.at(v).size()); }

  int local_end_index(int v, const EndRef& ref) const {
    const auto& ends = ends_at_.at(v);
    for (std::size_t i = 0; i < ends.size(); ++i) {
      if (ends[i] == ref) return static_cast<int>(i);
    }
    throw std::invalid_argument("graph: end not incident to vertex");
  }

  /// Outgoing bond associated with an edge end (direction away from the
  /// vertex that owns the end).
  static int end_outgoing_bond(const EndRef& ref) { return 2 * ref.edge + ref.end; }
  /// Incoming bond of an edge end.
  static int end_incoming_bond(const EndRef& ref) {
    return bond_reverse(end_outgoing_bond(ref));
  }

  bool has_positions() const {
    return std::all_of(positions_.begin(), positions_.end(),
                       [](const auto& p) { return p.has_value(); });
  }
  Eigen::Vector2d position(int v) const {
    const auto& p = positions_.at(v);
    if (!p) throw std::invalid_argument("graph: vertex has no embedding position");
    return {(*p)[0], (*p)[1]};
  }

  /// Unit vector of the planar edge direction, head minus tail.  Requires an
  /// embedding with distinct endpoint positions.
  Eigen::Vector2d edge_unit(int e) const {
    const Eigen::Vector2d d = position(head_.at(e)) - position(tail_.at(e));
    const double n = d.norm();
    if (!(n > 1e-12)) {
      throw std::invalid_argument("graph: degenerate embedding for edge " +
                                  std::to_string(edge_ids_[e]));
    }
    return d / n;
  }

  bool connected() const {
    std::vector<char> seen(vertex_ids_.size(), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& ref : ends_at_[v]) {
        const int w = ref.end == 0 ? head_[ref.edge] : tail_[ref.edge];
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  }

 private:
  std::vector<int> vertex_ids_;
  std::vector<std::optional<std::array<double, 2>>> positions_;
  std::vector<int> edge_ids_;
  std::vector<int> tail_, head_;
  std::vector<double> length_;
  std::vector<std::vector<EndRef>> ends_at_;
};

}  // namespace spingraph
