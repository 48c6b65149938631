#include "rdiff/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace rdiff {

double check_gradient(const Manifold& manifold, const CostFn& cost, const GradFn& rgrad,
                      const ManifoldPoint& x, int num_directions, double h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const TangentVector g = rgrad(x);
  double worst = 0.0;
  for (int i = 0; i < num_directions; ++i) {
    const TangentVector v = manifold.random_unit_tangent(x, rng);
    const double forward = cost(manifold.exp(x, h * v));
    const double backward = cost(manifold.exp(x, -h * v));
    const double fd = (forward - backward) / (2.0 * h);
    const double ip = manifold.inner(g, v);
    worst = std::max(worst, std::abs(fd - ip) / (std::abs(ip) + 1e-12));
  }
  return worst;
}

double check_gradient(const CostOracle& oracle, const ManifoldPoint& x, int num_directions,
                      double h, std::uint64_t seed) {
  return check_gradient(
      oracle.manifold(), [&](const ManifoldPoint& p) { return oracle.batch_cost(p); },
      [&](const ManifoldPoint& p) { return oracle.batch_rgrad(p); }, x, num_directions, h, seed);
}

}  // namespace rdiff
