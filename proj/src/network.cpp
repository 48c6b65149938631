#include "rdiff/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rdiff/errors.hpp"

namespace rdiff {
namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<std::size_t> parent;
};

void require_symmetric_support(const AgentGraph& graph, const Matrix& weights) {
  const auto k = static_cast<Eigen::Index>(graph.agents());
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j && weights(i, j) != 0.0 &&
          !graph.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        throw ContractViolation("topology: weight on a non-edge");
      }
    }
  }
}

}  // namespace

AgentGraph::AgentGraph(std::size_t agents, std::vector<Edge> edges)
    : agents_(agents), neighbors_(agents) {
  if (agents == 0) throw ContractViolation("graph: need at least one agent");
  for (auto& [a, b] : edges) {
    if (a == b) throw ContractViolation("graph: self-loops are not stored");
    if (a >= agents || b >= agents) throw ContractViolation("graph: edge endpoint out of range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

bool AgentGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i >= agents_ || j >= agents_) return false;
  const auto& nb = neighbors_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

bool AgentGraph::connected() const {
  DisjointSets sets(agents_);
  std::size_t components = agents_;
  for (const auto& [a, b] : edges_) {
    if (sets.unite(a, b)) --components;
  }
  return components == 1;
}

AgentGraph complete_graph(std::size_t agents) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t j = i + 1; j < agents; ++j) edges.emplace_back(i, j);
  }
  return AgentGraph(agents, std::move(edges));
}

AgentGraph path_graph(std::size_t agents) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < agents; ++i) edges.emplace_back(i, i + 1);
  return AgentGraph(agents, std::move(edges));
}

AgentGraph random_connected_graph(std::size_t agents, double edge_prob, std::uint64_t seed) {
  if (agents < 2) throw ContractViolation("random graph: need at least two agents");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) {
    throw ContractViolation("random graph: edge probability must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(edge_prob);
  std::vector<Edge> edges;
  DisjointSets sets(agents);
  std::size_t components = agents;
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t j = i + 1; j < agents; ++j) {
      if (coin(rng)) {
        edges.emplace_back(i, j);
        if (sets.unite(i, j)) --components;
      }
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, agents - 1);
  while (components > 1) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    if (sets.find(a) == sets.find(b)) continue;
    edges.emplace_back(a, b);
    sets.unite(a, b);
    --components;
  }
  return AgentGraph(agents, std::move(edges));
}

NetworkTopology metropolis_weights(const AgentGraph& graph) {
  if (!graph.connected()) throw ContractViolation("metropolis weights: graph is not connected");
  const auto k = static_cast<Eigen::Index>(graph.agents());
  Matrix c = Matrix::Zero(k, k);
  for (const auto& [a, b] : graph.edges()) {
    const double w = 1.0 / (1.0 + static_cast<double>(std::max(graph.degree(a), graph.degree(b))));
    c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w;
    c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = w;
  }
  for (Eigen::Index i = 0; i < k; ++i) c(i, i) = 1.0 - c.col(i).sum();
  NetworkTopology topo{graph, std::move(c), 0.0, "metropolis"};
  topo.lambda = mixing_rate(topo.weights);
  return topo;
}

NetworkTopology sinkhorn_uniform_weights(const AgentGraph& graph, std::uint64_t seed, double tol,
                                         int max_iter) {
  if (!graph.connected()) throw ContractViolation("uniform weights: graph is not connected");
  const auto k = static_cast<Eigen::Index>(graph.agents());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix c = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double u = 0.0;
    while (u == 0.0) u = unif(rng);
    c(i, i) = u;
  }
  for (const auto& [a, b] : graph.edges()) {
    double u = 0.0;
    while (u == 0.0) u = unif(rng);
    c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = u;
    c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = u;
  }

  double deviation = stochastic_deviation(c);
  int iter = 0;
  for (; iter < max_iter && deviation >= tol; ++iter) {
    c = c.array().colwise() / c.rowwise().sum().array();
    c = c.array().rowwise() / c.colwise().sum().array();
    deviation = stochastic_deviation(c);
  }
  if (deviation >= tol) {
    std::ostringstream os;
    os << "sinkhorn balancing did not converge after " << max_iter << " iterations";
    throw ConvergenceError(os.str(), deviation);
  }
  c = 0.5 * (c + c.transpose()).eval();
  c = c.array().colwise() / c.rowwise().sum().array();

  NetworkTopology topo{graph, std::move(c), 0.0, "uniform"};
  topo.lambda = mixing_rate(topo.weights);
  return topo;
}

double stochastic_deviation(const Matrix& weights) {
  const double rows = (weights.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (weights.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

double mixing_rate(const Matrix& weights, double tol) {
  if (weights.rows() != weights.cols() || weights.rows() == 0) {
    throw ContractViolation("mixing rate: weight matrix must be square and non-empty");
  }
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw ContractViolation("mixing rate: weight matrix is not symmetric");
  }
  if (weights.minCoeff() < 0.0 || stochastic_deviation(weights) > tol) {
    throw ContractViolation("mixing rate: weight matrix is not doubly stochastic");
  }
  const auto k = weights.rows();
  const Matrix deviation =
      weights - Matrix::Constant(k, k, 1.0 / static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (deviation + deviation.transpose()),
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

nlohmann::json to_json(const NetworkTopology& topology) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : topology.graph.edges()) edges.push_back({a, b});
  nlohmann::json weights = nlohmann::json::array();
  for (Eigen::Index i = 0; i < topology.weights.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < topology.weights.cols(); ++j) row.push_back(topology.weights(i, j));
    weights.push_back(std::move(row));
  }
  return {{"agents", topology.graph.agents()},
          {"rule", topology.rule},
          {"edges", std::move(edges)},
          {"weights", std::move(weights)},
          {"lambda", topology.lambda}};
}

NetworkTopology topology_from_json(const nlohmann::json& doc) {
  const auto agents = doc.at("agents").get<std::size_t>();
  std::vector<Edge> edges;
  for (const auto& e : doc.at("edges")) edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  AgentGraph graph(agents, std::move(edges));
  const auto k = static_cast<Eigen::Index>(agents);
  Matrix c(k, k);
  const auto& rows = doc.at("weights");
  if (rows.size() != agents) throw ContractViolation("topology json: weight matrix has wrong size");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != agents) {
      throw ContractViolation("topology json: weight matrix has wrong size");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      c(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  require_symmetric_support(graph, c);
  NetworkTopology topo{std::move(graph), std::move(c), 0.0, doc.value("rule", std::string("custom"))};
  topo.lambda = mixing_rate(topo.weights);
  return topo;
}

}  // namespace rdiff
