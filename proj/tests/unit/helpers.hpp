#pragma once

#include <cmath>
#include <initializer_list>
#include <random>

#include "rdiff/euclidean.hpp"
#include "rdiff/grassmann.hpp"

namespace rdiff::test {

inline ManifoldPoint vec(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return ManifoldPoint(m);
}

inline TangentVector tvec(const ManifoldPoint& base, std::initializer_list<double> xs) {
  return TangentVector(base, vec(xs).coords());
}

inline Matrix random_orthogonal(Eigen::Index p, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(p, p, rng));
  return qr.householderQ() * Matrix::Identity(p, p);
}

/// Horizontal tangent at u with spectral norm exactly `norm`.
inline TangentVector random_tangent(const GrassmannManifold& m, const ManifoldPoint& u, double norm,
                                    std::mt19937_64& rng) {
  Matrix xi = grassmann::project(u.coords(), gaussian_matrix(m.n(), m.p(), rng));
  const double s = Eigen::JacobiSVD<Matrix>(xi).singularValues()(0);
  return TangentVector(u, xi * (norm / s));
}

/// Principal angles from the eigenvalues of U1^T U2 U2^T U1 (cos^2), an
/// independent route to the same quantity.
inline Vector principal_angles_oracle(const Matrix& u1, const Matrix& u2) {
  const Matrix m = u1.transpose() * u2;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m * m.transpose());
  Vector out = es.eigenvalues();
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = std::acos(std::sqrt(std::clamp(out(i), 0.0, 1.0)));
  return out;
}

}  // namespace rdiff::test
