#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rdiff/errors.hpp"
#include "rdiff/manifold.hpp"
#include "rdiff/network.hpp"

namespace rdiff {

/// Metrics recorded after round t. Fields that were not requested stay empty.
struct MetricRecord {
  std::size_t t = 0;
  std::optional<double> msd;
  std::optional<double> frechet_variance;
  std::optional<double> consensus_bias;
  std::optional<double> cost;
  std::optional<double> grad_norm_sq;
};

class MetricTrace {
 public:
  /// Throws ContractViolation if t does not increase or a distance-type
  /// metric is negative.
  void append(const MetricRecord& record);

  const std::vector<MetricRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const MetricRecord& operator[](std::size_t i) const { return records_[i]; }
  const MetricRecord& back() const { return records_.back(); }

 private:
  std::vector<MetricRecord> records_;
};

struct KarcherOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

/// Karcher iteration ran out of steps; carries the last iterate.
class FrechetMeanError : public ConvergenceError {
 public:
  FrechetMeanError(const std::string& what, double residual, ManifoldPoint last)
      : ConvergenceError(what, residual), last_(std::move(last)) {}
  const ManifoldPoint& last_iterate() const noexcept { return last_; }

 private:
  ManifoldPoint last_;
};

/// Minimizer of sum_k d^2(w_k, m) via m <- exp_m((1/K) sum_k log_m(w_k)),
/// stopping once the mean log has norm <= tol. Starts from `init` when given,
/// otherwise from the first point.
ManifoldPoint frechet_mean(const Manifold& manifold, std::span<const ManifoldPoint> points,
                           const KarcherOptions& options = {},
                           const ManifoldPoint* init = nullptr);

struct FrechetSummary {
  ManifoldPoint mean;
  double variance = 0.0;
};

/// Frechet mean together with V_F = sum_k d^2(w_k, mean).
FrechetSummary frechet_summary(const Manifold& manifold, std::span<const ManifoldPoint> points,
                               const KarcherOptions& options = {},
                               const ManifoldPoint* init = nullptr);

double frechet_variance(const Manifold& manifold, std::span<const ManifoldPoint> points,
                        const KarcherOptions& options = {});

/// P = sum_k sum_l c_lk d^2(phi_k, phi_l).
double consensus_bias(const Manifold& manifold, std::span<const ManifoldPoint> points,
                      const NetworkTopology& topology);

/// (1/K) sum_k d^2(w_k, reference).
double msd(const Manifold& manifold, std::span<const ManifoldPoint> points,
           const ManifoldPoint& reference);

/// Squared norm of the stacked gradient col{(1/K) grad J_k}: (1/K^2) sum ||g_k||^2.
double stacked_grad_norm_sq(std::span<const TangentVector> gradients);

/// Largest pairwise distance among the points.
double max_pairwise_distance(const Manifold& manifold, std::span<const ManifoldPoint> points);

}  // namespace rdiff
