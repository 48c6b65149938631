#include "rdiff/quadratic.hpp"

#include <random>

#include "rdiff/errors.hpp"

namespace rdiff {

QuadraticOracle::QuadraticOracle(Matrix curvatures, Matrix minimizers, double noise_sigma)
    : manifold_(minimizers.rows()),
      curvatures_(std::move(curvatures)),
      minimizers_(std::move(minimizers)),
      sigma_(noise_sigma) {
  if (curvatures_.rows() != minimizers_.rows() || curvatures_.cols() != minimizers_.cols()) {
    throw ContractViolation("quadratic oracle: curvature and minimizer shapes differ");
  }
  if (minimizers_.cols() < 1) throw ContractViolation("quadratic oracle: need at least one agent");
  if (curvatures_.minCoeff() <= 0.0) throw ContractViolation("quadratic oracle: curvatures must be positive");
  if (sigma_ < 0.0) throw ContractViolation("quadratic oracle: noise sigma must be non-negative");
}

TangentVector QuadraticOracle::local_rgrad(std::size_t agent, const ManifoldPoint& w) const {
  manifold_.check_point(w);
  const auto k = static_cast<Eigen::Index>(agent);
  return TangentVector(
      w, curvatures_.col(k).cwiseProduct(w.coords().col(0) - minimizers_.col(k)));
}

TangentVector QuadraticOracle::stochastic_rgrad(std::size_t agent, std::size_t t,
                                                const ManifoldPoint& w, std::uint64_t seed) const {
  TangentVector g = local_rgrad(agent, w);
  if (sigma_ == 0.0) return g;
  std::mt19937_64 rng = keyed_rng({seed, static_cast<std::uint64_t>(StreamTag::kNoise), agent, t});
  std::normal_distribution<double> normal(0.0, sigma_);
  Matrix noise(g.components().rows(), 1);
  for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, 0) = normal(rng);
  return TangentVector(w, g.components() + noise);
}

double QuadraticOracle::local_cost(std::size_t agent, const ManifoldPoint& w) const {
  manifold_.check_point(w);
  const auto k = static_cast<Eigen::Index>(agent);
  const Vector diff = w.coords().col(0) - minimizers_.col(k);
  return 0.5 * diff.cwiseProduct(curvatures_.col(k)).dot(diff);
}

double QuadraticOracle::batch_cost(const ManifoldPoint& w) const {
  double total = 0.0;
  for (std::size_t k = 0; k < agents(); ++k) total += local_cost(k, w);
  return total / static_cast<double>(agents());
}

TangentVector QuadraticOracle::batch_rgrad(const ManifoldPoint& w) const {
  Matrix g = Matrix::Zero(minimizers_.rows(), 1);
  for (std::size_t k = 0; k < agents(); ++k) g += local_rgrad(k, w).components();
  return TangentVector(w, g / static_cast<double>(agents()));
}

ManifoldPoint QuadraticOracle::pooled_minimizer() const {
  const Vector weight = curvatures_.rowwise().sum();
  const Vector weighted = curvatures_.cwiseProduct(minimizers_).rowwise().sum();
  return ManifoldPoint(Matrix(weighted.cwiseQuotient(weight)));
}

ManifoldPoint QuadraticOracle::local_minimizer(std::size_t agent) const {
  return ManifoldPoint(Matrix(minimizers_.col(static_cast<Eigen::Index>(agent))));
}

QuadraticOracle make_quadratic_testbed(const QuadraticTestbedConfig& config, std::uint64_t seed) {
  if (config.agents < 1 || config.dim < 1) throw ContractViolation("quadratic testbed: empty configuration");
  if (!(config.curvature_min > 0.0 && config.curvature_min <= config.curvature_max)) {
    throw ContractViolation("quadratic testbed: need 0 < curvature_min <= curvature_max");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> curv(config.curvature_min, config.curvature_max);
  std::normal_distribution<double> normal(0.0, config.minimizer_spread);
  const auto k = static_cast<Eigen::Index>(config.agents);
  Matrix h(config.dim, k);
  Matrix b(config.dim, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < config.dim; ++i) {
      h(i, j) = curv(rng);
      b(i, j) = normal(rng);
    }
  }
  return QuadraticOracle(std::move(h), std::move(b), config.noise_sigma);
}

}  // namespace rdiff
