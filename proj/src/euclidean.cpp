#include "rdiff/euclidean.hpp"

#include <limits>

#include "rdiff/errors.hpp"

namespace rdiff {

EuclideanManifold::EuclideanManifold(Eigen::Index dim) : dim_(dim) {
  if (dim < 1) throw ContractViolation("euclidean: dimension must be positive");
}

double EuclideanManifold::injectivity_bound() const {
  return std::numeric_limits<double>::infinity();
}

ManifoldPoint EuclideanManifold::exp(const ManifoldPoint& x, const TangentVector& v) const {
  check_tangent(x, v);
  return ManifoldPoint(x.coords() + v.components());
}

TangentVector EuclideanManifold::log(const ManifoldPoint& x, const ManifoldPoint& y) const {
  check_point(x);
  check_point(y);
  return TangentVector(x, y.coords() - x.coords());
}

double EuclideanManifold::dist(const ManifoldPoint& x, const ManifoldPoint& y) const {
  check_point(x);
  check_point(y);
  return (y.coords() - x.coords()).norm();
}

TangentVector EuclideanManifold::transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                           const TangentVector& v) const {
  check_tangent(x, v);
  check_point(y);
  return TangentVector(y, v.components());
}

TangentVector EuclideanManifold::egrad_to_rgrad(const ManifoldPoint& x, const Matrix& egrad) const {
  check_point(x);
  return TangentVector(x, egrad);
}

ManifoldPoint EuclideanManifold::canonicalize(const Matrix& m) const {
  ManifoldPoint p(m);
  check_point(p);
  return p;
}

CurvatureProfile EuclideanManifold::curvature(double diameter) const {
  return {0.0, 0.0, diameter};
}

ManifoldPoint EuclideanManifold::random_point(std::mt19937_64& rng) const {
  return ManifoldPoint(gaussian_matrix(dim_, 1, rng));
}

}  // namespace rdiff
