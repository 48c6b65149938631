#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rdiff/manifold.hpp"

namespace rdiff {

using Edge = std::pair<std::size_t, std::size_t>;

/// Simple undirected graph over agents 0..K-1. Edges are stored once, as
/// (i, j) with i < j, in lexicographic order.
class AgentGraph {
 public:
  /// Throws ContractViolation on self-loops or out-of-range endpoints.
  /// Duplicate edges are merged.
  AgentGraph(std::size_t agents, std::vector<Edge> edges);
  AgentGraph() = default;  // empty graph, zero agents

  std::size_t agents() const noexcept { return agents_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool has_edge(std::size_t i, std::size_t j) const;
  std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
  bool connected() const;

 private:
  std::size_t agents_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

AgentGraph complete_graph(std::size_t agents);
AgentGraph path_graph(std::size_t agents);

/// Erdos-Renyi draw over all pairs (i < j, lexicographic), then random
/// cross-component edges are added until the graph is connected.
AgentGraph random_connected_graph(std::size_t agents, double edge_prob, std::uint64_t seed);

/// A connected graph with symmetric, doubly stochastic combination weights.
/// weights(l, k) is the weight agent k assigns to agent l's estimate.
struct NetworkTopology {
  AgentGraph graph;
  Matrix weights;
  double lambda = 0.0;
  std::string rule;
};

/// c_lk = 1 / (1 + max(deg l, deg k)) on edges, c_kk = 1 - sum_{l != k} c_lk.
NetworkTopology metropolis_weights(const AgentGraph& graph);

/// Random uniform(0,1) weights on edges and self-loops balanced to a
/// symmetric doubly stochastic matrix by alternating row/column scaling.
/// Throws ConvergenceError carrying the final deviation if max_iter passes do
/// not reach tol.
NetworkTopology sinkhorn_uniform_weights(const AgentGraph& graph, std::uint64_t seed,
                                         double tol = 1e-12, int max_iter = 100000);

/// Spectral radius of C - (1/K) 1 1^T. Throws ContractViolation unless C is
/// symmetric and doubly stochastic within `tol`.
double mixing_rate(const Matrix& weights, double tol = 1e-10);

/// Largest deviation of any row or column sum from one.
double stochastic_deviation(const Matrix& weights);

nlohmann::json to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const nlohmann::json& doc);

}  // namespace rdiff
