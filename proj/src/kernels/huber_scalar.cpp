#include <algorithm>
#include <cmath>

#include "rdiff/kernels/huber.hpp"

namespace rdiff::kernels::scalar {

double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted) {
  const double half_inv_delta = 0.5 / delta;
  const double half_delta = 0.5 * delta;
  double total = 0.0;
  for (std::size_t j = 0; j < rows; ++j) {
    double sumsq = 0.0;
    for (std::size_t i = 0; i < cols; ++i) {
      const double v = proj[i * rows + j];
      sumsq += v * v;
    }
    const double r = std::sqrt(sumsq);
    total += r >= delta ? r : sumsq * half_inv_delta + half_delta;
    const double w = 1.0 / std::max(r, delta);
    for (std::size_t i = 0; i < cols; ++i) weighted[i * rows + j] = proj[i * rows + j] * w;
  }
  return total;
}

}  // namespace rdiff::kernels::scalar
