#pragma once

#include <cstdint>
#include <vector>

#include "rdiff/cost_oracle.hpp"
#include "rdiff/euclidean.hpp"
#include "rdiff/random.hpp"

namespace rdiff {

/// Flat testbed with heterogeneous strongly convex quadratics
///   J_k(w) = 1/2 sum_i h_{k,i} (w_i - b_{k,i})^2
/// and additive Gaussian gradient noise of standard deviation sigma per
/// coordinate. The noise for (agent, round, seed) is reproducible.
class QuadraticOracle final : public CostOracle {
 public:
  /// curvatures and minimizers are d x K (one column per agent).
  QuadraticOracle(Matrix curvatures, Matrix minimizers, double noise_sigma);

  const Manifold& manifold() const override { return manifold_; }
  std::size_t agents() const override { return static_cast<std::size_t>(minimizers_.cols()); }

  TangentVector stochastic_rgrad(std::size_t agent, std::size_t t, const ManifoldPoint& w,
                                 std::uint64_t seed) const override;
  double local_cost(std::size_t agent, const ManifoldPoint& w) const override;
  TangentVector local_rgrad(std::size_t agent, const ManifoldPoint& w) const override;
  double batch_cost(const ManifoldPoint& w) const override;
  TangentVector batch_rgrad(const ManifoldPoint& w) const override;

  /// Minimizer of the pooled cost (1/K) sum_k J_k.
  ManifoldPoint pooled_minimizer() const;
  /// Minimizer of J_k alone.
  ManifoldPoint local_minimizer(std::size_t agent) const;
  double noise_sigma() const noexcept { return sigma_; }

 private:
  EuclideanManifold manifold_;
  Matrix curvatures_;
  Matrix minimizers_;
  double sigma_;
};

struct QuadraticTestbedConfig {
  std::size_t agents = 10;
  Eigen::Index dim = 2;
  double curvature_min = 0.5;
  double curvature_max = 1.5;
  double minimizer_spread = 1.0;  // std. deviation of the b_k entries
  double noise_sigma = 0.1;
};

/// Draws curvatures uniformly in [curvature_min, curvature_max] and
/// minimizers from N(0, spread^2).
QuadraticOracle make_quadratic_testbed(const QuadraticTestbedConfig& config, std::uint64_t seed);

}  // namespace rdiff
