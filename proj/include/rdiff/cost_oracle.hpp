#pragma once

#include <cstddef>
#include <cstdint>

#include "rdiff/manifold.hpp"

namespace rdiff {

/// Per-agent cost functions J_k and their (stochastic) Riemannian gradients.
///
/// stochastic_rgrad(k, t, w, seed) is the gradient estimate agent k uses at
/// round t; it must be a deterministic function of its arguments. The batch
/// methods evaluate the pooled cost (1/K) sum_k J_k on a single point and are
/// used for reference solutions and gradient certificates.
class CostOracle {
 public:
  virtual ~CostOracle() = default;

  virtual const Manifold& manifold() const = 0;
  virtual std::size_t agents() const = 0;

  virtual TangentVector stochastic_rgrad(std::size_t agent, std::size_t t, const ManifoldPoint& w,
                                         std::uint64_t seed) const = 0;

  virtual double local_cost(std::size_t agent, const ManifoldPoint& w) const = 0;
  virtual TangentVector local_rgrad(std::size_t agent, const ManifoldPoint& w) const = 0;

  virtual double batch_cost(const ManifoldPoint& w) const = 0;
  virtual TangentVector batch_rgrad(const ManifoldPoint& w) const = 0;
};

}  // namespace rdiff
