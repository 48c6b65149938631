#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Data-parallel inner loop of the robust-PCA batch cost and gradient.
//
// Input is the projection matrix Y = X^T U of N samples onto a p-column
// basis, stored column-major (N rows, p columns, column i at proj + i * N).
// For every sample j with r_j = ||Y(j, :)||:
//
//   cost contribution  Q_delta(r_j)  = r_j                        if r_j >= delta
//                                    = r_j^2 / (2 delta) + delta/2  otherwise
//   gradient weight    1 / max(r_j, delta)
//
// Every variant writes weighted(j, i) = Y(j, i) / max(r_j, delta) and returns
// sum_j Q_delta(r_j). `weighted` may alias `proj`.

namespace rdiff::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);

/// Variants compiled into this binary that the running CPU supports.
std::vector<Isa> available_isas();

/// Variant used by the dispatching entry point. Chosen once: the RD_SIMD
/// environment variable (scalar, avx2, neon, auto) if set and supported,
/// otherwise the widest available.
Isa active_isa();

double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted);

/// Runs one specific variant; throws std::invalid_argument if unavailable.
double huber_weights(Isa isa, const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted);

namespace scalar {
double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted);
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted);
}
#endif

#if defined(__aarch64__)
namespace neon {
double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted);
}
#endif

}  // namespace rdiff::kernels
