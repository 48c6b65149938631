#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rdiff::runner {

struct CertificateCase {
  std::string name;
  std::size_t points = 0;
  double max_rel_error = 0.0;
};

struct CertificateOptions {
  std::size_t points = 10;
  int directions = 20;
  double h = 1e-6;
  double kink_margin = 1e-4;  // points with a sample this close to ||U^T x|| = delta are redrawn
  std::uint64_t seed = 0;
};

/// Finite-difference check of the batch Riemannian gradients: robust PCA on
/// synthetic data with outliers, and the flat quadratic testbed.
std::vector<CertificateCase> gradient_certificate(const CertificateOptions& options = {});

}  // namespace rdiff::runner
