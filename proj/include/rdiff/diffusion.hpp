#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rdiff/cost_oracle.hpp"
#include "rdiff/errors.hpp"
#include "rdiff/metrics.hpp"
#include "rdiff/network.hpp"

namespace rdiff {

struct StepSizes {
  double mu = 0.0;     // adaptation
  double alpha = 0.0;  // combination
};

/// Iterates w_{k,t} and intermediate estimates phi_{k,t} of all agents.
struct AgentNetworkState {
  std::vector<ManifoldPoint> w;
  std::vector<ManifoldPoint> phi;
};

/// A per-agent step failed. `round` is filled in by the run drivers; `peer`
/// names the other agent when a pairwise log map failed.
class AgentStepError : public DomainError {
 public:
  AgentStepError(const std::string& what, std::size_t agent, std::optional<std::size_t> peer = {},
                 std::optional<std::size_t> round = {});
  std::size_t agent() const noexcept { return agent_; }
  std::optional<std::size_t> peer() const noexcept { return peer_; }
  std::optional<std::size_t> round() const noexcept { return round_; }

 private:
  std::size_t agent_;
  std::optional<std::size_t> peer_;
  std::optional<std::size_t> round_;
};

/// phi_k = exp_{w_k}(-mu * ghat_k) with ghat_k = oracle.stochastic_rgrad(k, t, w_k, seed).
std::vector<ManifoldPoint> adapt_step(const CostOracle& oracle, std::span<const ManifoldPoint> w,
                                      double mu, std::size_t t, std::uint64_t seed);

/// w_k = exp_{phi_k}(alpha * sum_l c_lk log_{phi_k}(phi_l)).
std::vector<ManifoldPoint> combine_step(const Manifold& manifold, std::span<const ManifoldPoint> phi,
                                        const NetworkTopology& topology, double alpha);

using RoundObserver = std::function<void(std::size_t t, std::span<const ManifoldPoint> phi,
                                         std::span<const ManifoldPoint> w)>;

/// Which metrics to record after each round, and what they need.
struct MetricHooks {
  bool msd = false;
  bool frechet_variance = false;
  bool consensus_bias = false;
  bool cost = false;          // (1/K) sum_k J_k(w_k)
  bool grad_norm_sq = false;  // (1/K^2) sum_k ||grad J_k(w_k)||^2

  std::optional<ManifoldPoint> reference;  // required for msd
  const NetworkTopology* topology = nullptr;  // required for consensus_bias
  KarcherOptions karcher;
  /// When set, logs a warning the first time two agents drift further apart.
  std::optional<double> diameter_bound;
  /// Called after every round with phi_t and w_t.
  RoundObserver observer;
};

/// T synchronous rounds of adapt_step followed by combine_step. Rounds are
/// numbered 1..T and every round appends one trace record.
MetricTrace run_diffusion(const CostOracle& oracle, const NetworkTopology& topology,
                          std::span<const ManifoldPoint> init, const StepSizes& steps,
                          std::size_t rounds, std::uint64_t seed, const MetricHooks& hooks = {});

/// Per-agent R-SGD without combination (run_diffusion with alpha = 0).
MetricTrace run_noncooperative(const CostOracle& oracle, std::span<const ManifoldPoint> init,
                               double mu, std::size_t rounds, std::uint64_t seed,
                               const MetricHooks& hooks = {});

struct ReferenceOptions {
  double initial_step = 1.0;
  std::size_t max_iter = 10000;
  double grad_tol = 1e-6;
  /// Consecutive cost increases tolerated before reporting divergence.
  int divergence_window = 20;
};

struct ReferenceSolution {
  ManifoldPoint point;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // false: max_iter reached before grad_tol
};

/// Full-batch Riemannian gradient descent on oracle.batch_cost with Armijo
/// backtracking (the trial step halves until sufficient decrease). Trial
/// steps start from the Barzilai-Borwein quotient of the previous move.
/// Throws ConvergenceError when the cost rises for `divergence_window`
/// consecutive iterations.
ReferenceSolution solve_reference(const CostOracle& oracle, const ManifoldPoint& init,
                                  const ReferenceOptions& options = {});

/// True when alpha lies in (0, zeta2/zeta1) for the manifold's curvature over
/// a region of the given diameter.
bool alpha_admissible(const Manifold& manifold, double alpha, double diameter);

}  // namespace rdiff
