#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "rdiff/kernels/huber.hpp"

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

namespace rdiff::kernels::avx2 {

double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted) {
  const __m256d vdelta = _mm256_set1_pd(delta);
  const __m256d vhalf_inv_delta = _mm256_set1_pd(0.5 / delta);
  const __m256d vhalf_delta = _mm256_set1_pd(0.5 * delta);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d vtotal = _mm256_setzero_pd();

  const std::size_t vec_rows = rows - rows % 4;
  std::size_t j = 0;
  for (; j < vec_rows; j += 4) {
    __m256d sumsq = _mm256_setzero_pd();
    for (std::size_t i = 0; i < cols; ++i) {
      const __m256d v = _mm256_loadu_pd(proj + i * rows + j);
      sumsq = _mm256_fmadd_pd(v, v, sumsq);
    }
    const __m256d r = _mm256_sqrt_pd(sumsq);
    const __m256d quad = _mm256_fmadd_pd(sumsq, vhalf_inv_delta, vhalf_delta);
    const __m256d linear = _mm256_cmp_pd(r, vdelta, _CMP_GE_OQ);
    vtotal = _mm256_add_pd(vtotal, _mm256_blendv_pd(quad, r, linear));
    const __m256d w = _mm256_div_pd(one, _mm256_max_pd(r, vdelta));
    for (std::size_t i = 0; i < cols; ++i) {
      const __m256d v = _mm256_loadu_pd(proj + i * rows + j);
      _mm256_storeu_pd(weighted + i * rows + j, _mm256_mul_pd(v, w));
    }
  }

  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vtotal);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  if (j < rows) {
    // Column stride stays `rows`; only the row range shrinks.
    for (std::size_t jj = j; jj < rows; ++jj) {
      double sumsq = 0.0;
      for (std::size_t i = 0; i < cols; ++i) {
        const double v = proj[i * rows + jj];
        sumsq += v * v;
      }
      const double r = __builtin_sqrt(sumsq);
      total += r >= delta ? r : sumsq * (0.5 / delta) + 0.5 * delta;
      const double w = 1.0 / (r > delta ? r : delta);
      for (std::size_t i = 0; i < cols; ++i) weighted[i * rows + jj] = proj[i * rows + jj] * w;
    }
  }
  return total;
}

}  // namespace rdiff::kernels::avx2

#endif
