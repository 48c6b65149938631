#include "rdiff/metrics.hpp"

#include <algorithm>
#include <sstream>

namespace rdiff {

void MetricTrace::append(const MetricRecord& record) {
  if (!records_.empty() && record.t <= records_.back().t) {
    throw ContractViolation("metric trace: round index must increase");
  }
  for (const auto* field : {&record.msd, &record.frechet_variance, &record.consensus_bias}) {
    if (field->has_value() && !(**field >= 0.0)) {
      throw ContractViolation("metric trace: distance-type metric is negative or NaN");
    }
  }
  records_.push_back(record);
}

ManifoldPoint frechet_mean(const Manifold& manifold, std::span<const ManifoldPoint> points,
                           const KarcherOptions& options, const ManifoldPoint* init) {
  if (points.empty()) throw ContractViolation("frechet mean: need at least one point");
  const double inv_k = 1.0 / static_cast<double>(points.size());
  ManifoldPoint m = init != nullptr ? *init : points.front();
  double residual = 0.0;
  for (int iter = 0; iter <= options.max_iter; ++iter) {
    TangentVector step = manifold.zero(m);
    for (const auto& w : points) step += manifold.log(m, w);
    step *= inv_k;
    residual = step.norm();
    if (residual <= options.tol) return m;
    if (iter == options.max_iter) break;
    m = manifold.exp(m, step);
  }
  std::ostringstream os;
  os << "frechet mean: no convergence after " << options.max_iter << " iterations (residual "
     << residual << ")";
  throw FrechetMeanError(os.str(), residual, std::move(m));
}

FrechetSummary frechet_summary(const Manifold& manifold, std::span<const ManifoldPoint> points,
                               const KarcherOptions& options, const ManifoldPoint* init) {
  FrechetSummary out{frechet_mean(manifold, points, options, init), 0.0};
  for (const auto& w : points) {
    const double d = manifold.dist(w, out.mean);
    out.variance += d * d;
  }
  return out;
}

double frechet_variance(const Manifold& manifold, std::span<const ManifoldPoint> points,
                        const KarcherOptions& options) {
  return frechet_summary(manifold, points, options).variance;
}

double consensus_bias(const Manifold& manifold, std::span<const ManifoldPoint> points,
                      const NetworkTopology& topology) {
  const std::size_t k = topology.graph.agents();
  if (points.size() != k) throw ContractViolation("consensus bias: point count differs from agent count");
  double total = 0.0;
  for (const auto& [a, b] : topology.graph.edges()) {
    const double d = manifold.dist(points[a], points[b]);
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    total += (topology.weights(ia, ib) + topology.weights(ib, ia)) * d * d;
  }
  return total;
}

double msd(const Manifold& manifold, std::span<const ManifoldPoint> points,
           const ManifoldPoint& reference) {
  if (points.empty()) throw ContractViolation("msd: need at least one point");
  double total = 0.0;
  for (const auto& w : points) {
    const double d = manifold.dist(w, reference);
    total += d * d;
  }
  return total / static_cast<double>(points.size());
}

double stacked_grad_norm_sq(std::span<const TangentVector> gradients) {
  if (gradients.empty()) throw ContractViolation("stacked gradient: empty gradient list");
  double total = 0.0;
  for (const auto& g : gradients) total += g.squared_norm();
  const auto k = static_cast<double>(gradients.size());
  return total / (k * k);
}

double max_pairwise_distance(const Manifold& manifold, std::span<const ManifoldPoint> points) {
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      worst = std::max(worst, manifold.dist(points[i], points[j]));
    }
  }
  return worst;
}

}  // namespace rdiff
