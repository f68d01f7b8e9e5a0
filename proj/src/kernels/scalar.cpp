#include <cmath>

#include "metafuse/kernels.hpp"

namespace metafuse::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double max_abs_scalar(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::fabs(x[i]);
    if (v > m || std::isnan(v)) m = v;
  }
  return m;
}

}  // namespace

const KernelSet& scalar() {
  static const KernelSet set{"scalar", &dot_scalar, &axpy_scalar, &max_abs_scalar};
  return set;
}

}  // namespace metafuse::kernels
