#if defined(__aarch64__)

#include <arm_neon.h>

#include "rdiff/kernels/huber.hpp"

namespace rdiff::kernels::neon {

double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted) {
  const float64x2_t vdelta = vdupq_n_f64(delta);
  const float64x2_t vhalf_inv_delta = vdupq_n_f64(0.5 / delta);
  const float64x2_t vhalf_delta = vdupq_n_f64(0.5 * delta);
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t vtotal = vdupq_n_f64(0.0);

  const std::size_t vec_rows = rows - rows % 2;
  std::size_t j = 0;
  for (; j < vec_rows; j += 2) {
    float64x2_t sumsq = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < cols; ++i) {
      const float64x2_t v = vld1q_f64(proj + i * rows + j);
      sumsq = vfmaq_f64(sumsq, v, v);
    }
    const float64x2_t r = vsqrtq_f64(sumsq);
    const float64x2_t quad = vfmaq_f64(vhalf_delta, sumsq, vhalf_inv_delta);
    const uint64x2_t linear = vcgeq_f64(r, vdelta);
    vtotal = vaddq_f64(vtotal, vbslq_f64(linear, r, quad));
    const float64x2_t w = vdivq_f64(one, vmaxq_f64(r, vdelta));
    for (std::size_t i = 0; i < cols; ++i) {
      const float64x2_t v = vld1q_f64(proj + i * rows + j);
      vst1q_f64(weighted + i * rows + j, vmulq_f64(v, w));
    }
  }

  double total = vgetq_lane_f64(vtotal, 0) + vgetq_lane_f64(vtotal, 1);
  for (; j < rows; ++j) {
    double sumsq = 0.0;
    for (std::size_t i = 0; i < cols; ++i) {
      const double v = proj[i * rows + j];
      sumsq += v * v;
    }
    const double r = __builtin_sqrt(sumsq);
    total += r >= delta ? r : sumsq * (0.5 / delta) + 0.5 * delta;
    const double w = 1.0 / (r > delta ? r : delta);
    for (std::size_t i = 0; i < cols; ++i) weighted[i * rows + j] = proj[i * rows + j] * w;
  }
  return total;
}

}  // namespace rdiff::kernels::neon

#endif
