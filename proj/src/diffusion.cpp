#include "rdiff/diffusion.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

namespace rdiff {
namespace {

std::string describe(const std::string& what, std::size_t agent, std::optional<std::size_t> peer,
                     std::optional<std::size_t> round) {
  std::ostringstream os;
  os << what << " [agent " << agent;
  if (peer) os << ", peer " << *peer;
  if (round) os << ", round " << *round;
  os << "]";
  return os.str();
}

void record_metrics(const CostOracle& oracle, std::span<const ManifoldPoint> w, std::size_t t,
                    const MetricHooks& hooks, std::optional<ManifoldPoint>& frechet_warm_start,
                    MetricTrace& trace) {
  const Manifold& manifold = oracle.manifold();
  MetricRecord rec;
  rec.t = t;
  if (hooks.msd) rec.msd = msd(manifold, w, *hooks.reference);
  if (hooks.frechet_variance) {
    FrechetSummary s = frechet_summary(manifold, w, hooks.karcher,
                                       frechet_warm_start ? &*frechet_warm_start : nullptr);
    rec.frechet_variance = s.variance;
    frechet_warm_start = std::move(s.mean);
  }
  if (hooks.consensus_bias) rec.consensus_bias = consensus_bias(manifold, w, *hooks.topology);
  if (hooks.cost) {
    double total = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) total += oracle.local_cost(k, w[k]);
    rec.cost = total / static_cast<double>(w.size());
  }
  if (hooks.grad_norm_sq) {
    std::vector<TangentVector> grads;
    grads.reserve(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) grads.push_back(oracle.local_rgrad(k, w[k]));
    rec.grad_norm_sq = stacked_grad_norm_sq(grads);
  }
  trace.append(rec);
}

void validate_hooks(const MetricHooks& hooks) {
  if (hooks.msd && !hooks.reference) throw ContractViolation("metric hooks: msd needs a reference point");
  if (hooks.consensus_bias && hooks.topology == nullptr) {
    throw ContractViolation("metric hooks: consensus bias needs a topology");
  }
}

MetricTrace run_rounds(const CostOracle& oracle, const NetworkTopology* topology,
                       std::span<const ManifoldPoint> init, const StepSizes& steps,
                       std::size_t rounds, std::uint64_t seed, const MetricHooks& hooks) {
  if (rounds < 1) throw ContractViolation("run: need at least one round");
  if (!(steps.mu > 0.0)) throw ContractViolation("run: mu must be positive");
  if (steps.alpha < 0.0) throw ContractViolation("run: alpha must be non-negative");
  if (init.size() != oracle.agents()) {
    throw ContractViolation("run: initial state size differs from the agent count");
  }
  if (topology != nullptr && topology->graph.agents() != oracle.agents()) {
    throw ContractViolation("run: topology size differs from the agent count");
  }
  validate_hooks(hooks);

  const Manifold& manifold = oracle.manifold();
  std::vector<ManifoldPoint> w(init.begin(), init.end());
  std::optional<ManifoldPoint> frechet_warm_start;
  bool diameter_warned = false;
  MetricTrace trace;

  for (std::size_t t = 1; t <= rounds; ++t) {
    std::vector<ManifoldPoint> phi;
    try {
      phi = adapt_step(oracle, w, steps.mu, t, seed);
      if (topology != nullptr && steps.alpha != 0.0) {
        w = combine_step(manifold, phi, *topology, steps.alpha);
      } else {
        w = phi;
      }
    } catch (const AgentStepError& e) {
      throw AgentStepError(e.what(), e.agent(), e.peer(), t);
    }

    if (hooks.diameter_bound && !diameter_warned) {
      const double spread = max_pairwise_distance(manifold, w);
      if (spread > *hooks.diameter_bound) {
        spdlog::warn("round {}: agents are {:.4g} apart, beyond the assumed diameter {:.4g}", t,
                     spread, *hooks.diameter_bound);
        diameter_warned = true;
      }
    }
    record_metrics(oracle, w, t, hooks, frechet_warm_start, trace);
    if (hooks.observer) hooks.observer(t, phi, w);
  }
  return trace;
}

}  // namespace

AgentStepError::AgentStepError(const std::string& what, std::size_t agent,
                               std::optional<std::size_t> peer, std::optional<std::size_t> round)
    : DomainError(round ? what + " [round " + std::to_string(*round) + "]"
                        : describe(what, agent, peer, round)),
      agent_(agent),
      peer_(peer),
      round_(round) {}

std::vector<ManifoldPoint> adapt_step(const CostOracle& oracle, std::span<const ManifoldPoint> w,
                                      double mu, std::size_t t, std::uint64_t seed) {
  if (w.size() != oracle.agents()) throw ContractViolation("adapt step: state size differs from the agent count");
  const Manifold& manifold = oracle.manifold();
  std::vector<ManifoldPoint> phi;
  phi.reserve(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    try {
      const TangentVector g = oracle.stochastic_rgrad(k, t, w[k], seed);
      phi.push_back(manifold.exp(w[k], -mu * g));
    } catch (const DomainError& e) {
      throw AgentStepError(std::string("adaptation step failed: ") + e.what(), k);
    }
  }
  return phi;
}

std::vector<ManifoldPoint> combine_step(const Manifold& manifold, std::span<const ManifoldPoint> phi,
                                        const NetworkTopology& topology, double alpha) {
  const std::size_t agents = topology.graph.agents();
  if (phi.size() != agents) throw ContractViolation("combine step: state size differs from the agent count");
  std::vector<ManifoldPoint> w;
  w.reserve(agents);
  for (std::size_t k = 0; k < agents; ++k) {
    TangentVector v = manifold.zero(phi[k]);
    for (std::size_t l : topology.graph.neighbors(k)) {
      const double c = topology.weights(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
      if (c == 0.0) continue;
      try {
        v += c * manifold.log(phi[k], phi[l]);
      } catch (const DomainError& e) {
        throw AgentStepError(std::string("combination log map failed: ") + e.what(), k, l);
      }
    }
    v *= alpha;
    try {
      w.push_back(manifold.exp(phi[k], v));
    } catch (const DomainError& e) {
      throw AgentStepError(std::string("combination exp map failed: ") + e.what(), k);
    }
  }
  return w;
}

MetricTrace run_diffusion(const CostOracle& oracle, const NetworkTopology& topology,
                          std::span<const ManifoldPoint> init, const StepSizes& steps,
                          std::size_t rounds, std::uint64_t seed, const MetricHooks& hooks) {
  return run_rounds(oracle, &topology, init, steps, rounds, seed, hooks);
}

MetricTrace run_noncooperative(const CostOracle& oracle, std::span<const ManifoldPoint> init,
                               double mu, std::size_t rounds, std::uint64_t seed,
                               const MetricHooks& hooks) {
  return run_rounds(oracle, nullptr, init, StepSizes{mu, 0.0}, rounds, seed, hooks);
}

ReferenceSolution solve_reference(const CostOracle& oracle, const ManifoldPoint& init,
                                  const ReferenceOptions& options) {
  const Manifold& manifold = oracle.manifold();
  // Keep every trial step well inside the injectivity region.
  const double max_step_norm = std::isfinite(manifold.injectivity_bound())
                                   ? 0.5 * manifold.injectivity_bound()
                                   : std::numeric_limits<double>::infinity();
  constexpr double kArmijo = 1e-4;

  ManifoldPoint x = init;
  double f = oracle.batch_cost(x);
  double step = options.initial_step;
  int increases = 0;
  std::optional<TangentVector> prev_g;  // gradient and step at the previous iterate
  Matrix prev_s;
  for (std::size_t iter = 0;; ++iter) {
    const TangentVector g = oracle.batch_rgrad(x);
    const double gnorm = g.norm();
    if (gnorm <= options.grad_tol) return {x, gnorm, iter, true};
    if (iter == options.max_iter) {
      spdlog::warn("reference solver stopped after {} iterations with gradient norm {:.3e}", iter, gnorm);
      return {x, gnorm, iter, false};
    }

    // Barzilai-Borwein trial step from the last displacement and gradient
    // change, both carried to T_x by re-projection.
    if (prev_g) {
      const Matrix s = manifold.egrad_to_rgrad(x, prev_s).components();
      const Matrix y = g.components() - manifold.egrad_to_rgrad(x, prev_g->components()).components();
      const double sy = (s.array() * y.array()).sum();
      if (sy > 0.0) step = s.squaredNorm() / sy;
    }
    step = std::min(step, max_step_norm / gnorm);
    ManifoldPoint trial = manifold.exp(x, -step * g);
    double f_trial = oracle.batch_cost(trial);
    while (f_trial > f - kArmijo * step * gnorm * gnorm && step > 1e-20) {
      step *= 0.5;
      trial = manifold.exp(x, -step * g);
      f_trial = oracle.batch_cost(trial);
    }
    increases = f_trial > f ? increases + 1 : 0;
    if (increases >= options.divergence_window) {
      throw ConvergenceError("reference solver: cost increased for " +
                                 std::to_string(options.divergence_window) + " consecutive steps",
                             gnorm);
    }
    prev_s = -step * g.components();
    prev_g = g;
    x = std::move(trial);
    f = f_trial;
    step *= 2.0;  // used only when the BB quotient is unavailable
  }
}

bool alpha_admissible(const Manifold& manifold, double alpha, double diameter) {
  const ZetaConstants z = zeta_constants(manifold.curvature(diameter));
  return alpha > 0.0 && alpha < z.zeta2 / z.zeta1;
}

}  // namespace rdiff
