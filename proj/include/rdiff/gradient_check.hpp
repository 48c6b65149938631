#pragma once

#include <cstdint>
#include <functional>

#include "rdiff/cost_oracle.hpp"

namespace rdiff {

using CostFn = std::function<double(const ManifoldPoint&)>;
using GradFn = std::function<TangentVector(const ManifoldPoint&)>;

/// Largest relative mismatch between the geodesic central difference
///   (f(exp_x(h v)) - f(exp_x(-h v))) / (2h)
/// and <grad f(x), v> over `num_directions` random unit tangents v, each
/// normalized by |<grad f(x), v>| + 1e-12.
double check_gradient(const Manifold& manifold, const CostFn& cost, const GradFn& rgrad,
                      const ManifoldPoint& x, int num_directions, double h,
                      std::uint64_t seed = 0);

/// Same check applied to the oracle's batch cost and batch gradient.
double check_gradient(const CostOracle& oracle, const ManifoldPoint& x, int num_directions,
                      double h, std::uint64_t seed = 0);

}  // namespace rdiff
