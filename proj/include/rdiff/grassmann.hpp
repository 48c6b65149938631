#pragma once

#include "rdiff/manifold.hpp"

namespace rdiff {

/// Raw Grassmann geometry on orthonormal n x p representatives. Every
/// function here is invariant to replacing a representative U by U O with O
/// orthogonal; tangent vectors are horizontal (U^T xi = 0) and transform as
/// xi -> xi O along with their base.
namespace grassmann {

/// Cosines of the principal angles (singular values of U1^T U2), clamped to
/// [0, 1] and sorted in decreasing order.
Vector principal_cosines(const Matrix& u1, const Matrix& u2);

/// Geodesic distance ||arccos(theta)||_2.
double dist(const Matrix& u1, const Matrix& u2);

/// Tangent projection (I - U U^T) G.
Matrix project(const Matrix& u, const Matrix& g);

/// exp_U(xi) = U Y cos(S) Y^T + X sin(S) Y^T with xi = X S Y^T the thin SVD
/// of xi, re-orthonormalized by canonicalize(). Throws DomainError if a
/// singular value of xi reaches pi/2.
Matrix exp(const Matrix& u, const Matrix& xi);

/// Inverse of exp. With M = U1^T U2 and (U2 - U1 M) M^{-1} = Q S R^T,
/// returns Q arctan(S) R^T. Throws DomainError when M is singular (a
/// principal angle equals pi/2).
Matrix log(const Matrix& u1, const Matrix& u2);

/// Parallel transport of the horizontal vector v at U1 along the geodesic
/// from U1 to U2, expressed at the representative U2.
Matrix transport(const Matrix& u1, const Matrix& u2, const Matrix& v);

/// Orthonormal basis of the column space of m via thin QR, with the sign of
/// each column chosen so that R has a positive diagonal. Throws DomainError
/// when m is numerically rank deficient.
Matrix canonicalize(const Matrix& m);

/// max |U^T U - I|.
double orthonormality_error(const Matrix& u);

}  // namespace grassmann

/// The Grassmann manifold G(n, p) of p-dimensional subspaces of R^n.
class GrassmannManifold final : public Manifold {
 public:
  GrassmannManifold(Eigen::Index n, Eigen::Index p);

  std::string name() const override { return "grassmann"; }
  Shape point_shape() const override { return {n_, p_}; }
  /// Bound on each principal angle (the spectral norm of a tangent).
  double injectivity_bound() const override;

  ManifoldPoint exp(const ManifoldPoint& x, const TangentVector& v) const override;
  TangentVector log(const ManifoldPoint& x, const ManifoldPoint& y) const override;
  double dist(const ManifoldPoint& x, const ManifoldPoint& y) const override;
  TangentVector transport(const ManifoldPoint& x, const ManifoldPoint& y,
                          const TangentVector& v) const override;
  TangentVector egrad_to_rgrad(const ManifoldPoint& x, const Matrix& egrad) const override;
  ManifoldPoint canonicalize(const Matrix& m) const override;
  /// kappa in [0, 2] for p >= 2 (and n - p >= 2); flat when p = 1 and n = 2.
  CurvatureProfile curvature(double diameter) const override;
  ManifoldPoint random_point(std::mt19937_64& rng) const override;
  /// Also requires U^T U = I within 1e-10.
  void check_point(const ManifoldPoint& x) const override;

  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index p() const noexcept { return p_; }

 private:
  void check_horizontal(const ManifoldPoint& x, const TangentVector& v) const;

  Eigen::Index n_;
  Eigen::Index p_;
};

}  // namespace rdiff
