#include "rdiff/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rdiff/errors.hpp"

namespace rdiff {
namespace grassmann {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
// Below this cosine the largest principal angle is treated as pi/2.
constexpr double kCutLocusCosine = 1e-12;
// exp re-orthonormalizes its output when U^T U drifts further than this.
constexpr double kDriftTolerance = 1e-12;

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "grassmann " << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
       << b.rows() << "x" << b.cols();
    throw ContractViolation(os.str());
  }
}

// Closest orthogonal matrix to a (polar factor).
Matrix orthogonal_factor(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

Vector principal_cosines(const Matrix& u1, const Matrix& u2) {
  require_same_shape(u1, u2, "principal_cosines");
  Vector c = Eigen::JacobiSVD<Matrix>(u1.transpose() * u2).singularValues();
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

double dist(const Matrix& u1, const Matrix& u2) {
  const Vector cosines = principal_cosines(u1, u2);
  // Sines of the same angles, ascending, pair with the descending cosines.
  // arccos loses half the digits for small angles, so those use arcsin.
  const Matrix residual = u2 - u1 * (u1.transpose() * u2);
  Vector sines = Eigen::JacobiSVD<Matrix>(residual).singularValues();
  std::sort(sines.data(), sines.data() + sines.size());
  sines = sines.cwiseMin(1.0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < cosines.size(); ++i) {
    const double c = cosines(i);
    const double angle = (c * c < 0.5 || i >= sines.size()) ? std::acos(c) : std::asin(sines(i));
    sum += angle * angle;
  }
  return std::sqrt(sum);
}

Matrix project(const Matrix& u, const Matrix& g) {
  require_same_shape(u, g, "project");
  // Second pass removes what cancellation left behind when G lies mostly in span(U).
  Matrix r = g - u * (u.transpose() * g);
  r -= u * (u.transpose() * r);
  return r;
}

Matrix exp(const Matrix& u, const Matrix& xi) {
  require_same_shape(u, xi, "exp");
  Eigen::JacobiSVD<Matrix> svd(xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() > 0 && sigma(0) >= kHalfPi) {
    std::ostringstream os;
    os << "grassmann exp: tangent spectral norm " << sigma(0) << " reaches the injectivity bound pi/2";
    throw DomainError(os.str());
  }
  const Matrix& x = svd.matrixU();
  const Matrix& y = svd.matrixV();
  const Vector cos_s = sigma.array().cos();
  const Vector sin_s = sigma.array().sin();
  Matrix out = (u * y * cos_s.asDiagonal() + x * sin_s.asDiagonal()) * y.transpose();
  if (orthonormality_error(out) > kDriftTolerance) out = canonicalize(out);
  return out;
}

Matrix log(const Matrix& u1, const Matrix& u2) {
  require_same_shape(u1, u2, "log");
  const Matrix m = u1.transpose() * u2;
  Eigen::JacobiSVD<Matrix> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& c = msvd.singularValues();
  if (c.size() > 0 && c(c.size() - 1) <= kCutLocusCosine) {
    throw DomainError("grassmann log: points are on each other's cut locus (a principal angle is pi/2)");
  }
  // M^{-1} through its SVD: V diag(1/c) U^T.
  const Matrix m_inv =
      msvd.matrixV() * c.cwiseInverse().asDiagonal() * msvd.matrixU().transpose();
  const Matrix tangent_dir = (u2 - u1 * m) * m_inv;
  Eigen::JacobiSVD<Matrix> svd(tangent_dir, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector angles = svd.singularValues().array().atan();
  return svd.matrixU() * angles.asDiagonal() * svd.matrixV().transpose();
}

Matrix transport(const Matrix& u1, const Matrix& u2, const Matrix& v) {
  require_same_shape(u1, v, "transport");
  const Matrix xi = log(u1, u2);
  Eigen::JacobiSVD<Matrix> svd(xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix& x = svd.matrixU();
  const Matrix& y = svd.matrixV();
  const Vector& sigma = svd.singularValues();
  const Vector cos_s = sigma.array().cos();
  const Vector sin_s = sigma.array().sin();

  const Matrix xtv = x.transpose() * v;
  // (-U Y sin(S) X^T + X cos(S) X^T + I - X X^T) v
  Matrix moved = v - u1 * (y * (sin_s.asDiagonal() * xtv)) + x * ((cos_s.array() - 1.0).matrix().asDiagonal() * xtv);

  // The formula lands at the geodesic endpoint representative; rotate it onto u2.
  const Matrix endpoint = (u1 * y * cos_s.asDiagonal() + x * sin_s.asDiagonal()) * y.transpose();
  moved = moved * orthogonal_factor(endpoint.transpose() * u2);
  return project(u2, moved);
}

Matrix canonicalize(const Matrix& m) {
  const Eigen::Index n = m.rows();
  const Eigen::Index p = m.cols();
  if (p == 0 || p > n) throw DomainError("grassmann canonicalize: need 0 < p <= n");
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  const Matrix r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = std::max(m.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(r(i, i)) <= 1e-12 * scale) {
      throw DomainError("grassmann canonicalize: matrix is numerically rank deficient");
    }
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

double orthonormality_error(const Matrix& u) {
  const Matrix gram = u.transpose() * u;
  return (gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace grassmann

GrassmannManifold::GrassmannManifold(Eigen::Index n, Eigen::Index p) : n_(n), p_(p) {
  if (p < 1 || n < p) throw ContractViolation("grassmann: need 1 <= p <= n");
}

double GrassmannManifold::injectivity_bound() const { return std::numbers::pi / 2; }

void GrassmannManifold::check_point(const ManifoldPoint& x) const {
  Manifold::check_point(x);
  if (grassmann::orthonormality_error(x.coords()) > 1e-10) {
    throw ContractViolation("grassmann: representative is not orthonormal");
  }
}

void GrassmannManifold::check_horizontal(const ManifoldPoint& x, const TangentVector& v) const {
  check_tangent(x, v);
  const double tol = 1e-10 * std::max(1.0, v.norm());
  if ((x.coords().transpose() * v.components()).cwiseAbs().maxCoeff() > tol) {
    throw ContractViolation("grassmann: tangent vector is not horizontal (U^T xi != 0)");
  }
}

ManifoldPoint GrassmannManifold::exp(const ManifoldPoint& x, const TangentVector& v) const {
  check_horizontal(x, v);
  return ManifoldPoint(grassmann::exp(x.coords(), v.components()));
}

TangentVector GrassmannManifold::log(const ManifoldPoint& x, const ManifoldPoint& y) const {
  check_point(x);
  check_point(y);
  return TangentVector(x, grassmann::log(x.coords(), y.coords()));
}

double GrassmannManifold::dist(const ManifoldPoint& x, const ManifoldPoint& y) const {
  check_point(x);
  check_point(y);
  return grassmann::dist(x.coords(), y.coords());
}

TangentVector GrassmannManifold::transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                           const TangentVector& v) const {
  check_horizontal(x, v);
  check_point(y);
  return TangentVector(y, grassmann::transport(x.coords(), y.coords(), v.components()));
}

TangentVector GrassmannManifold::egrad_to_rgrad(const ManifoldPoint& x, const Matrix& egrad) const {
  check_point(x);
  if (egrad.rows() != n_ || egrad.cols() != p_) {
    throw ContractViolation("grassmann egrad_to_rgrad: gradient shape does not match the point");
  }
  return TangentVector(x, grassmann::project(x.coords(), egrad));
}

ManifoldPoint GrassmannManifold::canonicalize(const Matrix& m) const {
  if (m.rows() != n_ || m.cols() != p_) {
    throw ContractViolation("grassmann canonicalize: shape does not match the manifold");
  }
  return ManifoldPoint(grassmann::canonicalize(m));
}

CurvatureProfile GrassmannManifold::curvature(double diameter) const {
  const Eigen::Index k = std::min(p_, n_ - p_);
  if (k >= 2) return {0.0, 2.0, diameter};
  if (k == 1 && n_ >= 3) return {1.0, 1.0, diameter};
  return {0.0, 0.0, diameter};
}

ManifoldPoint GrassmannManifold::random_point(std::mt19937_64& rng) const {
  return ManifoldPoint(grassmann::canonicalize(gaussian_matrix(n_, p_, rng)));
}

}  // namespace rdiff
