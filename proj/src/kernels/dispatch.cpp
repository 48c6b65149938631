#include <cstdlib>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "rdiff/kernels/huber.hpp"

namespace rdiff::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa select_isa() {
  const auto available = available_isas();
  const Isa widest = available.back();
  const char* env = std::getenv("RD_SIMD");
  if (env == nullptr) return widest;
  const std::string requested(env);
  if (requested.empty() || requested == "auto") return widest;
  for (Isa isa : available) {
    if (requested == to_string(isa)) return isa;
  }
  spdlog::warn("RD_SIMD={} is not available on this machine; using {}", requested, to_string(widest));
  return widest;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::kScalar};
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

double huber_weights(Isa isa, const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted) {
  if (!cpu_supports(isa)) {
    throw std::invalid_argument("huber kernel variant '" + std::string(to_string(isa)) +
                                "' is not available");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::kAvx2:
      return avx2::huber_weights(proj, rows, cols, delta, weighted);
#endif
#if defined(__aarch64__)
    case Isa::kNeon:
      return neon::huber_weights(proj, rows, cols, delta, weighted);
#endif
    default:
      return scalar::huber_weights(proj, rows, cols, delta, weighted);
  }
}

double huber_weights(const double* proj, std::size_t rows, std::size_t cols, double delta,
                     double* weighted) {
  return huber_weights(active_isa(), proj, rows, cols, delta, weighted);
}

}  // namespace rdiff::kernels
