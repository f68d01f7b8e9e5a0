#pragma once

// Inner-loop arithmetic used by the trainer. Every kernel has a scalar
// reference implementation; SIMD variants (AVX2+FMA on x86-64, NEON on
// aarch64) are picked at runtime when the CPU supports them. Variants differ
// only in summation order, so results agree to rounding, not bitwise.

#include <cstddef>
#include <span>
#include <string_view>

namespace metafuse::kernels {

struct KernelSet {
  std::string_view name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// max_i |x[i]|
  double (*max_abs)(const double* x, std::size_t n);
};

enum class Preference { automatic, scalar, simd };

const KernelSet& scalar();

/// SIMD set for this CPU, or nullptr when not compiled in or not supported.
const KernelSet* simd();

/// Resolves a preference. `automatic` honours METAFUSE_KERNELS=scalar|simd|auto
/// and otherwise prefers SIMD; `simd` falls back to scalar when unavailable.
const KernelSet& select(Preference p);

/// Same as select(Preference::automatic).
const KernelSet& active();

Preference parse_preference(std::string_view text);

inline double dot(const KernelSet& k, std::span<const double> a, std::span<const double> b) {
  return k.dot(a.data(), b.data(), a.size());
}

inline void axpy(const KernelSet& k, double alpha, std::span<const double> x, std::span<double> y) {
  k.axpy(alpha, x.data(), y.data(), x.size());
}

inline double max_abs(const KernelSet& k, std::span<const double> x) {
  return k.max_abs(x.data(), x.size());
}

namespace detail {
const KernelSet* avx2_if_supported();
const KernelSet* neon_if_supported();
}  // namespace detail

}  // namespace metafuse::kernels
