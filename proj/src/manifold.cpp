#include "rdiff/manifold.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rdiff/errors.hpp"

namespace rdiff {

std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << s.rows << "x" << s.cols;
  return os.str();
}

bool ManifoldPoint::same_representative(const ManifoldPoint& other) const {
  if (coords_.rows() != other.coords_.rows() || coords_.cols() != other.coords_.cols()) {
    return false;
  }
  if (coords_.data() == other.coords_.data()) return true;
  return coords_ == other.coords_;
}

TangentVector::TangentVector(ManifoldPoint base, Matrix components)
    : base_(std::move(base)), components_(std::move(components)) {
  if (base_.shape() != Shape{components_.rows(), components_.cols()}) {
    throw ContractViolation("tangent components " +
                            to_string({components_.rows(), components_.cols()}) +
                            " do not match base point shape " + to_string(base_.shape()));
  }
}

void require_same_base(const TangentVector& a, const TangentVector& b) {
  if (!a.base().same_representative(b.base())) {
    throw ContractViolation("tangent vectors are attached to different base points");
  }
}

TangentVector& TangentVector::operator+=(const TangentVector& other) {
  require_same_base(*this, other);
  components_ += other.components_;
  return *this;
}

TangentVector& TangentVector::operator*=(double s) {
  components_ *= s;
  return *this;
}

TangentVector operator+(TangentVector a, const TangentVector& b) {
  a += b;
  return a;
}

TangentVector operator-(const TangentVector& a, const TangentVector& b) {
  require_same_base(a, b);
  return TangentVector(a.base(), a.components() - b.components());
}

TangentVector operator*(double s, TangentVector v) {
  v *= s;
  return v;
}

TangentVector operator-(TangentVector v) {
  v *= -1.0;
  return v;
}

void CurvatureProfile::validate() const {
  if (!(kappa_min <= kappa_max)) {
    throw DomainError("curvature profile requires kappa_min <= kappa_max");
  }
  if (!(diameter > 0.0)) {
    throw DomainError("curvature profile requires a positive diameter");
  }
  if (kappa_max > 0.0 && diameter * std::sqrt(kappa_max) >= std::numbers::pi / 2) {
    std::ostringstream os;
    os << "diameter " << diameter << " must be below pi/(2 sqrt(kappa_max)) = "
       << std::numbers::pi / (2 * std::sqrt(kappa_max));
    throw DomainError(os.str());
  }
}

ZetaConstants zeta_constants(const CurvatureProfile& profile) {
  profile.validate();
  ZetaConstants z;
  if (profile.kappa_min < 0.0) {
    const double s = profile.diameter * std::sqrt(-profile.kappa_min);
    z.zeta1 = s / std::tanh(s);
  }
  if (profile.kappa_max > 0.0) {
    const double s = profile.diameter * std::sqrt(profile.kappa_max);
    z.zeta2 = s / std::tan(s);
  }
  return z;
}

double epsilon_constant(const ZetaConstants& zeta, double alpha, double lambda,
                        double c_kappa, double diameter) {
  const double upper = zeta.zeta2 / zeta.zeta1;
  if (!(alpha > 0.0 && alpha < upper)) {
    std::ostringstream os;
    os << "alpha = " << alpha << " outside the admissible interval (0, " << upper << ")";
    throw DomainError(os.str());
  }
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw DomainError("mixing rate must lie in [0, 1)");
  }
  if (c_kappa < 0.0) throw DomainError("c_kappa must be non-negative");
  const double lip = 1.0 + c_kappa * diameter * diameter;
  return -2.0 * (1.0 - lambda) * (zeta.zeta1 * alpha * alpha - zeta.zeta2 * alpha) / (lip * lip);
}

double Manifold::inner(const TangentVector& a, const TangentVector& b) const {
  require_same_base(a, b);
  return (a.components().array() * b.components().array()).sum();
}

TangentVector Manifold::zero(const ManifoldPoint& x) const {
  return TangentVector(x, Matrix::Zero(x.coords().rows(), x.coords().cols()));
}

TangentVector Manifold::random_unit_tangent(const ManifoldPoint& x, std::mt19937_64& rng) const {
  const Shape s = point_shape();
  for (;;) {
    TangentVector v = egrad_to_rgrad(x, gaussian_matrix(s.rows, s.cols, rng));
    const double nv = v.norm();
    if (nv > 1e-8) return (1.0 / nv) * std::move(v);
  }
}

void Manifold::check_point(const ManifoldPoint& x) const {
  if (x.shape() != point_shape()) {
    throw ContractViolation(name() + ": point shape " + to_string(x.shape()) +
                            " does not match " + to_string(point_shape()));
  }
}

void Manifold::check_tangent(const ManifoldPoint& x, const TangentVector& v) const {
  check_point(x);
  if (!v.base().same_representative(x)) {
    throw ContractViolation(name() + ": tangent vector is not attached to the given point");
  }
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace rdiff
