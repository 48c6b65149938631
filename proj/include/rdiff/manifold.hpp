#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>

namespace rdiff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// A point on a manifold, stored by its coordinate matrix. For the Grassmann
/// manifold this is one orthonormal representative of the subspace.
class ManifoldPoint {
 public:
  ManifoldPoint() = default;
  explicit ManifoldPoint(Matrix coords) : coords_(std::move(coords)) {}

  const Matrix& coords() const noexcept { return coords_; }
  Shape shape() const noexcept { return {coords_.rows(), coords_.cols()}; }

  /// Bitwise equality of the stored representative.
  bool same_representative(const ManifoldPoint& other) const;

 private:
  Matrix coords_;
};

/// A tangent vector together with the point it is attached to. Binary
/// operations on tangents require identical base representatives.
class TangentVector {
 public:
  TangentVector() = default;
  TangentVector(ManifoldPoint base, Matrix components);

  const ManifoldPoint& base() const noexcept { return base_; }
  const Matrix& components() const noexcept { return components_; }

  double squared_norm() const { return components_.squaredNorm(); }
  double norm() const { return components_.norm(); }

  TangentVector& operator+=(const TangentVector& other);
  TangentVector& operator*=(double s);

 private:
  ManifoldPoint base_;
  Matrix components_;
};

TangentVector operator+(TangentVector a, const TangentVector& b);
TangentVector operator-(const TangentVector& a, const TangentVector& b);
TangentVector operator*(double s, TangentVector v);
TangentVector operator-(TangentVector v);

/// Throws ContractViolation unless both tangents live at the same base.
void require_same_base(const TangentVector& a, const TangentVector& b);

/// Sectional-curvature bounds and the diameter of the region the iterates
/// are assumed to stay in.
struct CurvatureProfile {
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  double diameter = 1.0;

  /// Throws DomainError if kappa_min > kappa_max, diameter <= 0, or the
  /// diameter violates B < pi / (2 sqrt(kappa_max)).
  void validate() const;
};

struct ZetaConstants {
  double zeta1 = 1.0;
  double zeta2 = 1.0;
};

/// Trigonometric distance-comparison constants for a curvature profile.
///   zeta1 = B sqrt(-kmin) coth(B sqrt(-kmin))  if kmin < 0, else 1
///   zeta2 = B sqrt(kmax) cot(B sqrt(kmax))     if kmax > 0, else 1
ZetaConstants zeta_constants(const CurvatureProfile& profile);

/// Per-round Frechet-variance contraction factor of the combination step,
///   eps = -2 (1 - lambda)(zeta1 a^2 - zeta2 a) / (1 + c_kappa B^2)^2.
/// Requires alpha in (0, zeta2/zeta1) and lambda in [0, 1).
double epsilon_constant(const ZetaConstants& zeta, double alpha, double lambda,
                        double c_kappa, double diameter);

/// Behavioral contract shared by every manifold in the library. All methods
/// are pure; implementations hold only immutable configuration.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  virtual Shape point_shape() const = 0;

  /// Largest admissible tangent magnitude for exp/log (infinity when flat).
  virtual double injectivity_bound() const = 0;

  virtual ManifoldPoint exp(const ManifoldPoint& x, const TangentVector& v) const = 0;
  virtual TangentVector log(const ManifoldPoint& x, const ManifoldPoint& y) const = 0;
  virtual double dist(const ManifoldPoint& x, const ManifoldPoint& y) const = 0;
  /// Parallel transport of v (based at x) along the geodesic from x to y.
  virtual TangentVector transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                  const TangentVector& v) const = 0;
  virtual TangentVector egrad_to_rgrad(const ManifoldPoint& x, const Matrix& egrad) const = 0;
  virtual ManifoldPoint canonicalize(const Matrix& m) const = 0;

  /// Curvature profile for a region of the given diameter.
  virtual CurvatureProfile curvature(double diameter) const = 0;

  virtual ManifoldPoint random_point(std::mt19937_64& rng) const = 0;

  double inner(const TangentVector& a, const TangentVector& b) const;
  TangentVector zero(const ManifoldPoint& x) const;

  /// Uniformly random direction of unit norm in T_x.
  TangentVector random_unit_tangent(const ManifoldPoint& x, std::mt19937_64& rng) const;

  /// Throws ContractViolation if x does not have the declared point shape
  /// (or, for constrained manifolds, violates the representative invariant).
  virtual void check_point(const ManifoldPoint& x) const;
  void check_tangent(const ManifoldPoint& x, const TangentVector& v) const;
};

/// Dense matrix with i.i.d. standard normal entries.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

}  // namespace rdiff
