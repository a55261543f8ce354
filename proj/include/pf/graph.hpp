#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pf/common.hpp"

namespace pf {

/// Raw, unvalidated graph description as it arrives from a file or caller.
struct GraphSpec {
  std::vector<std::string> even;
  std::vector<std::string> odd;
  std::vector<std::pair<std::string, std::string>> edges;  // (even name, odd name)
  std::map<std::string, int> m_plus;                       // optional; defaults to 1
};

/// A finite connected bipartite multigraph with all edges directed even -> odd.
///
/// Vertex and edge order is insertion order from the input spec and is never
/// re-sorted; every basis built downstream inherits this order.
class BipartiteGraph {
 public:
  struct Edge {
    int id;
    int source;  // even vertex index
    int target;  // odd vertex index
  };

  const std::vector<std::string>& even_names() const { return even_; }
  const std::vector<std::string>& odd_names() const { return odd_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int num_even() const { return static_cast<int>(even_.size()); }
  int num_odd() const { return static_cast<int>(odd_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Dimension vector m+ on even vertices.
  int m_plus(int even_vertex) const { return m_plus_[even_vertex]; }
  const std::vector<int>& m_plus_vector() const { return m_plus_; }

  /// Derived m-(w) = sum over edges into w of m+(source).
  int m_minus(int odd_vertex) const { return m_minus_[odd_vertex]; }
  const std::vector<int>& m_minus_vector() const { return m_minus_; }

  int edge_source(int edge_id) const { return edges_[edge_id].source; }
  int edge_target(int edge_id) const { return edges_[edge_id].target; }

  /// Edge ids leaving a given even vertex, in id order.
  const std::vector<int>& edges_at_even(int v) const { return at_even_[v]; }
  /// Edge ids arriving at a given odd vertex, in id order.
  const std::vector<int>& edges_at_odd(int w) const { return at_odd_[w]; }

  /// Integer inclusion matrix, rows = even vertices, cols = odd vertices.
  std::vector<std::vector<long long>> inclusion_matrix() const {
    std::vector<std::vector<long long>> m(even_.size(), std::vector<long long>(odd_.size(), 0));
    for (const auto& e : edges_) m[e.source][e.target] += 1;
    return m;
  }

  friend BipartiteGraph validate_and_canonicalize(const GraphSpec& spec);

 private:
  std::vector<std::string> even_, odd_;
  std::vector<Edge> edges_;
  std::vector<int> m_plus_, m_minus_;
  std::vector<std::vector<int>> at_even_, at_odd_;
};

/// Validates a raw spec and produces the canonical graph: vertex and edge
/// order preserved from the input, edge ids assigned sequentially.
inline BipartiteGraph validate_and_canonicalize(const GraphSpec& spec) {
  require(!spec.even.empty() && !spec.odd.empty() && !spec.edges.empty(), Errc::EmptyGraph,
          "graph needs at least one even vertex, one odd vertex and one edge");

  std::map<std::string, int> even_index, odd_index;
  for (std::size_t i = 0; i < spec.even.size(); ++i) {
    require(even_index.emplace(spec.even[i], static_cast<int>(i)).second, Errc::InvalidInput,
            "duplicate even vertex '" + spec.even[i] + "'");
  }
  for (std::size_t i = 0; i < spec.odd.size(); ++i) {
    require(!even_index.count(spec.odd[i]), Errc::InvalidInput,
            "vertex '" + spec.odd[i] + "' listed on both sides");
    require(odd_index.emplace(spec.odd[i], static_cast<int>(i)).second, Errc::InvalidInput,
            "duplicate odd vertex '" + spec.odd[i] + "'");
  }

  BipartiteGraph g;
  g.even_ = spec.even;
  g.odd_ = spec.odd;
  g.at_even_.resize(spec.even.size());
  g.at_odd_.resize(spec.odd.size());

  for (const auto& [a, b] : spec.edges) {
    auto ea = even_index.find(a);
    auto ob = odd_index.find(b);
    if (ea == even_index.end()) {
      require(!odd_index.count(a), Errc::NotBipartite,
              "edge [" + a + ", " + b + "] does not run from an even to an odd vertex");
      fail(Errc::UnknownVertex, "edge endpoint '" + a + "' is not a declared vertex");
    }
    if (ob == odd_index.end()) {
      require(!even_index.count(b), Errc::NotBipartite,
              "edge [" + a + ", " + b + "] does not run from an even to an odd vertex");
      fail(Errc::UnknownVertex, "edge endpoint '" + b + "' is not a declared vertex");
    }
    int id = static_cast<int>(g.edges_.size());
    g.edges_.push_back({id, ea->second, ob->second});
    g.at_even_[ea->second].push_back(id);
    g.at_odd_[ob->second].push_back(id);
  }

  g.m_plus_.assign(spec.even.size(), 1);
  for (const auto& [name, value] : spec.m_plus) {
    auto it = even_index.find(name);
    require(it != even_index.end(), Errc::UnknownVertex,
            "m_plus names unknown even vertex '" + name + "'");
    require(value > 0, Errc::NonPositiveDimension,
            "m_plus[" + name + "] must be a positive integer");
    g.m_plus_[it->second] = value;
  }

  g.m_minus_.assign(spec.odd.size(), 0);
  for (const auto& e : g.edges_) g.m_minus_[e.target] += g.m_plus_[e.source];
  for (std::size_t w = 0; w < spec.odd.size(); ++w) {
    require(g.m_minus_[w] > 0, Errc::Disconnected,
            "odd vertex '" + spec.odd[w] + "' has no incident edge");
  }

  // Connectivity of the underlying undirected graph.
  std::vector<char> seen_even(spec.even.size(), 0), seen_odd(spec.odd.size(), 0);
  seen_even[0] = 1;
  std::vector<std::pair<int, bool>> frontier = {{0, true}};
  while (!frontier.empty()) {
    auto [v, is_even] = frontier.back();
    frontier.pop_back();
    if (is_even) {
      for (int id : g.at_even_[v]) {
        int w = g.edges_[id].target;
        if (!seen_odd[w]) {
          seen_odd[w] = 1;
          frontier.push_back({w, false});
        }
      }
    } else {
      for (int id : g.at_odd_[v]) {
        int u = g.edges_[id].source;
        if (!seen_even[u]) {
          seen_even[u] = 1;
          frontier.push_back({u, true});
        }
      }
    }
  }
  bool connected = std::all_of(seen_even.begin(), seen_even.end(), [](char c) { return c; }) &&
                   std::all_of(seen_odd.begin(), seen_odd.end(), [](char c) { return c; });
  require(connected, Errc::Disconnected, "graph is not connected");
  return g;
}

/// The graph with a distinguished vertex star joined to every even vertex v
/// by m+(v) distinct edges. Star edge ids continue after the base edge ids.
class AugmentedGraph {
 public:
  explicit AugmentedGraph(BipartiteGraph base) : base_(std::move(base)) {
    int next = base_.num_edges();
    star_at_even_.resize(base_.num_even());
    for (int v = 0; v < base_.num_even(); ++v) {
      for (int k = 0; k < base_.m_plus(v); ++k) {
        star_at_even_[v].push_back(next);
        star_target_.push_back(v);
        ++next;
      }
    }
  }

  const BipartiteGraph& base() const { return base_; }
  int num_star_edges() const { return static_cast<int>(star_target_.size()); }
  bool is_star_edge(int edge_id) const { return edge_id >= base_.num_edges(); }
  /// Even vertex a star edge points to.
  int star_target(int edge_id) const { return star_target_[edge_id - base_.num_edges()]; }
  /// Star edge ids at a given even vertex, in id order.
  const std::vector<int>& star_edges_at(int even_vertex) const { return star_at_even_[even_vertex]; }
  /// The distinguished (lowest-id) star edge at an even vertex.
  int distinguished_star_edge(int even_vertex) const { return star_at_even_[even_vertex].front(); }

 private:
  BipartiteGraph base_;
  std::vector<int> star_target_;
  std::vector<std::vector<int>> star_at_even_;
};

inline AugmentedGraph augment(const BipartiteGraph& g) { return AugmentedGraph(g); }

}  // namespace pf
