#pragma once

#include "rdiff/manifold.hpp"

namespace rdiff {

/// Flat space R^n with points stored as n x 1 columns. Serves as the
/// reference geometry: exp is addition, log is subtraction, transport is the
/// identity.
class EuclideanManifold final : public Manifold {
 public:
  explicit EuclideanManifold(Eigen::Index dim);

  std::string name() const override { return "euclidean"; }
  Shape point_shape() const override { return {dim_, 1}; }
  double injectivity_bound() const override;

  ManifoldPoint exp(const ManifoldPoint& x, const TangentVector& v) const override;
  TangentVector log(const ManifoldPoint& x, const ManifoldPoint& y) const override;
  double dist(const ManifoldPoint& x, const ManifoldPoint& y) const override;
  TangentVector transport(const ManifoldPoint& x, const ManifoldPoint& y,
                          const TangentVector& v) const override;
  TangentVector egrad_to_rgrad(const ManifoldPoint& x, const Matrix& egrad) const override;
  ManifoldPoint canonicalize(const Matrix& m) const override;
  CurvatureProfile curvature(double diameter) const override;
  ManifoldPoint random_point(std::mt19937_64& rng) const override;

  Eigen::Index dim() const noexcept { return dim_; }

 private:
  Eigen::Index dim_;
};

}  // namespace rdiff
