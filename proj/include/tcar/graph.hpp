#pragma once

// Causal DAG induced by an SCM, with edge coefficients (beta) and response
// times (tau), plus the path algebra behind the time cost.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tcar/errors.hpp"
#include "tcar/scm.hpp"

namespace tcar {

struct Edge {
  std::string from;
  std::string to;
  double beta = 0.0;
  double tau = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Response-time annotations keyed by (parent, child).
using ResponseTimes = std::map<std::pair<std::string, std::string>, double>;

inline std::string edge_key(std::string_view from, std::string_view to) {
  return std::string(from) + "->" + std::string(to);
}

inline std::pair<std::string, std::string> parse_edge_key(std::string_view key) {
  const auto pos = key.find("->");
  if (pos == std::string_view::npos || pos == 0 || pos + 2 >= key.size()) {
    throw std::invalid_argument("edge key '" + std::string(key) + "' is not of the form from->to");
  }
  return {std::string(key.substr(0, pos)), std::string(key.substr(pos + 2))};
}

struct PathRecord {
  std::vector<std::string> nodes;
  double weight = 1.0;
  double time = 0.0;

  std::string str() const {
    std::string out;
    for (const auto& n : nodes) out += (out.empty() ? "" : "->") + n;
    return out;
  }
};

class CausalDag {
 public:
  CausalDag() = default;
  CausalDag(std::vector<std::string> nodes, std::vector<Edge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!index_.emplace(nodes_[i], i).second) throw ModelError("duplicate node '" + nodes_[i] + "'");
    }
    out_.assign(nodes_.size(), {});
    std::vector<std::size_t> indegree(nodes_.size(), 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& edge = edges_[e];
      const auto from = index_of(edge.from);
      const auto to = index_of(edge.to);
      if (!(edge.tau >= 0.0) || !std::isfinite(edge.tau)) {
        throw ModelError("response time on " + edge_key(edge.from, edge.to) + " must be finite and >= 0");
      }
      if (!std::isfinite(edge.beta)) throw ModelError("non-finite beta on " + edge_key(edge.from, edge.to));
      if (from == to) throw ModelError("self loop on '" + edge.from + "'");
      out_[from].push_back(e);
      ++indegree[to];
    }
    for (auto& list : out_) {
      std::sort(list.begin(), list.end(),
                [this](std::size_t a, std::size_t b) { return edges_[a].to < edges_[b].to; });
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (indegree[i] == 0) ready.push(i);
    }
    while (!ready.empty()) {
      auto v = ready.top();
      ready.pop();
      order_.push_back(v);
      for (auto e : out_[v]) {
        if (--indegree[index_.at(edges_[e].to)] == 0) ready.push(index_.at(edges_[e].to));
      }
    }
    if (order_.size() != nodes_.size()) throw ModelError("causal graph contains a cycle");
  }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& order() const { return order_; }
  // Outgoing edge indices of a node, sorted by child name.
  const std::vector<std::size_t>& out_edges(std::size_t node) const { return out_[node]; }

  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }
  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw std::invalid_argument("unknown node '" + std::string(name) + "'");
    return it->second;
  }

  const Edge* find_edge(std::string_view from, std::string_view to) const {
    for (const auto& e : edges_) {
      if (e.from == from && e.to == to) return &e;
    }
    return nullptr;
  }

  CausalDag with_tau(std::string_view from, std::string_view to, double tau) const {
    auto edges = edges_;
    bool found = false;
    for (auto& e : edges) {
      if (e.from == from && e.to == to) {
        e.tau = tau;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("no edge " + edge_key(from, to));
    return CausalDag(nodes_, std::move(edges));
  }

  // Every path into `node` uses exactly one of its in-edges, so this scales
  // each path weight ending there by the same factor.
  CausalDag scaled_betas_into(std::string_view node, double factor) const {
    index_of(node);
    auto edges = edges_;
    for (auto& e : edges) {
      if (e.to == node) e.beta *= factor;
    }
    return CausalDag(nodes_, std::move(edges));
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::size_t> order_;
};

/// Nodes are the SCM variables plus the target node; edges are the parent
/// relations plus one edge per nonzero target coefficient. Unannotated
/// edges get tau = 0.
inline CausalDag from_scm(const Scm& scm, const ResponseTimes& times = {}) {
  scm.require_valid();
  std::vector<std::string> nodes;
  for (const auto& v : scm.variables()) nodes.push_back(v.name);
  nodes.push_back(scm.target().name);

  std::vector<Edge> edges;
  for (const auto& v : scm.variables()) {
    for (const auto& p : v.equation.parents) edges.push_back({p, v.name, v.equation.coefficients.at(p), 0.0});
  }
  for (const auto& v : scm.variables()) {
    auto it = scm.target().coefficients.find(v.name);
    if (it != scm.target().coefficients.end() && it->second != 0.0) {
      edges.push_back({v.name, scm.target().name, it->second, 0.0});
    }
  }
  for (const auto& [key, tau] : times) {
    auto hit = std::find_if(edges.begin(), edges.end(),
                            [&](const Edge& e) { return e.from == key.first && e.to == key.second; });
    if (hit == edges.end()) {
      throw std::invalid_argument("response time given for nonexistent edge " + edge_key(key.first, key.second));
    }
    hit->tau = tau;
  }
  return CausalDag(std::move(nodes), std::move(edges));
}

inline constexpr std::size_t kDefaultPathCap = 100000;

/// All directed paths from -> to, in lexicographic order of node sequence.
inline std::vector<PathRecord> enumerate_paths(const CausalDag& dag, std::string_view from, std::string_view to,
                                               std::size_t cap = kDefaultPathCap) {
  const auto src = dag.index_of(from);
  const auto dst = dag.index_of(to);
  std::vector<PathRecord> out;
  PathRecord current;
  current.nodes.push_back(dag.nodes()[src]);

  auto dfs = [&](auto&& self, std::size_t v) -> void {
    if (v == dst) {
      if (out.size() >= cap) {
        throw PathLimitError("more than " + std::to_string(cap) + " paths between '" + std::string(from) +
                             "' and '" + std::string(to) + "'");
      }
      out.push_back(current);
      return;
    }
    for (auto e : dag.out_edges(v)) {
      const auto& edge = dag.edges()[e];
      const double w = current.weight;
      const double t = current.time;
      current.nodes.push_back(edge.to);
      current.weight = w * edge.beta;
      current.time = t + edge.tau;
      self(self, dag.index_of(edge.to));
      current.nodes.pop_back();
      current.weight = w;
      current.time = t;
    }
  };
  dfs(dfs, src);
  return out;
}

/// Longest path length (sum of tau), or nullopt when `to` is unreachable.
inline std::optional<double> longest_path_time(const CausalDag& dag, std::string_view from, std::string_view to) {
  const auto src = dag.index_of(from);
  const auto dst = dag.index_of(to);
  std::vector<std::optional<double>> best(dag.nodes().size());
  best[dst] = 0.0;
  const auto& order = dag.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    if (v == dst) continue;
    for (auto e : dag.out_edges(v)) {
      const auto& edge = dag.edges()[e];
      const auto& child = best[dag.index_of(edge.to)];
      if (!child) continue;
      const double cand = edge.tau + *child;
      if (!best[v] || cand > *best[v]) best[v] = cand;
    }
  }
  return best[src];
}

struct PathSums {
  double z = 0.0;   // sum of path weights
  double wt = 0.0;  // sum of weight * time
};

/// Sum over paths of w and w*t by dynamic programming on the reverse
/// topological order; `absolute` uses |w| in both sums.
inline PathSums path_weight_sums(const CausalDag& dag, std::string_view from, std::string_view to,
                                 bool absolute = false) {
  const auto src = dag.index_of(from);
  const auto dst = dag.index_of(to);
  std::vector<PathSums> acc(dag.nodes().size());
  acc[dst] = {1.0, 0.0};
  const auto& order = dag.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    if (v == dst) continue;
    PathSums s;
    for (auto e : dag.out_edges(v)) {
      const auto& edge = dag.edges()[e];
      const auto& c = acc[dag.index_of(edge.to)];
      const double beta = absolute ? std::abs(edge.beta) : edge.beta;
      s.z += beta * c.z;
      s.wt += beta * (c.wt + edge.tau * c.z);
    }
    acc[v] = s;
  }
  return acc[src];
}

inline double total_causal_effect(const CausalDag& dag, std::string_view from, std::string_view to) {
  return path_weight_sums(dag, from, to).z;
}

enum class Weighting { raw, absolute };

inline constexpr double kMinPathWeightSum = 1e-9;

/// Path-weighted mean propagation time from -> to.
inline double expected_response_time(const CausalDag& dag, std::string_view from, std::string_view to,
                                     Weighting weighting = Weighting::raw) {
  if (!longest_path_time(dag, from, to)) {
    throw std::invalid_argument("no directed path from '" + std::string(from) + "' to '" + std::string(to) + "'");
  }
  const auto s = path_weight_sums(dag, from, to, weighting == Weighting::absolute);
  if (std::abs(s.z) < kMinPathWeightSum) {
    throw IllDefinedAverageError("path weights from '" + std::string(from) + "' to '" + std::string(to) +
                                 "' sum to ~0; use absolute weighting");
  }
  return s.wt / s.z;
}

}  // namespace tcar
