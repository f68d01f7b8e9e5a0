// aarch64 only; NEON is part of the base ISA there, so no runtime probe is needed.

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "metafuse/kernels.hpp"

namespace metafuse::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double max_abs_neon(const double* x, std::size_t n) {
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::fabs(x[i]);
    if (std::isnan(v)) return v;
    if (v > r) r = v;
  }
  return r;
}

}  // namespace

namespace detail {

const KernelSet* neon_if_supported() {
  static const KernelSet set{"neon", &dot_neon, &axpy_neon, &max_abs_neon};
  return &set;
}

}  // namespace detail
}  // namespace metafuse::kernels
