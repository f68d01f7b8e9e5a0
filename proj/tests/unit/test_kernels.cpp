#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "metafuse/error.hpp"
#include "metafuse/kernels.hpp"
#include "metafuse/random.hpp"

using namespace metafuse;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = standard_normal(rng) * 10.0;
  return v;
}

long double exact_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

}  // namespace

TEST(Kernels, ScalarIsAlwaysAvailable) {
  EXPECT_EQ(kernels::scalar().name, "scalar");
  EXPECT_EQ(&kernels::select(kernels::Preference::scalar), &kernels::scalar());
}

TEST(Kernels, PreferenceParsing) {
  EXPECT_EQ(kernels::parse_preference("auto"), kernels::Preference::automatic);
  EXPECT_EQ(kernels::parse_preference("scalar"), kernels::Preference::scalar);
  EXPECT_EQ(kernels::parse_preference("simd"), kernels::Preference::simd);
  EXPECT_THROW(kernels::parse_preference("avx9000"), ConfigError);
}

TEST(Kernels, ScalarDotMatchesLongDouble) {
  Rng rng(1);
  for (std::size_t n : {0u, 1u, 7u, 100u}) {
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    EXPECT_NEAR(kernels::dot(kernels::scalar(), a, b), static_cast<double>(exact_dot(a, b)), 1e-9);
  }
}

class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    simd_ = kernels::simd();
    if (simd_ == nullptr) GTEST_SKIP() << "no SIMD kernels on this CPU";
  }
  const kernels::KernelSet* simd_ = nullptr;
};

TEST_F(SimdEquivalence, DotAgreesOnAllTailLengths) {
  Rng rng(2);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    const double s = kernels::dot(kernels::scalar(), a, b);
    const double v = kernels::dot(*simd_, a, b);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::fabs(a[i] * b[i]);
    EXPECT_NEAR(s, v, 1e-13 * (mag + 1.0)) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, AxpyIsBitIdentical) {
  Rng rng(3);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto x = random_vector(rng, n);
    auto y1 = random_vector(rng, n);
    auto y2 = y1;
    const double alpha = standard_normal(rng);
    kernels::axpy(kernels::scalar(), alpha, x, y1);
    kernels::axpy(*simd_, alpha, x, y2);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15 * (std::fabs(y1[i]) + 1.0));
  }
}

TEST_F(SimdEquivalence, MaxAbsIsExact) {
  Rng rng(4);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto x = random_vector(rng, n);
    EXPECT_EQ(kernels::max_abs(kernels::scalar(), x), kernels::max_abs(*simd_, x)) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, MaxAbsPropagatesNan) {
  for (std::size_t pos : {0u, 3u, 9u, 16u}) {
    std::vector<double> x(17, 1.0);
    x[pos] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_TRUE(std::isnan(kernels::max_abs(kernels::scalar(), x)));
    EXPECT_TRUE(std::isnan(kernels::max_abs(*simd_, x)));
  }
}

TEST(Kernels, SimdPreferenceFallsBackToScalar) {
  const auto* simd = kernels::simd();
  const auto& chosen = kernels::select(kernels::Preference::simd);
  EXPECT_EQ(chosen.name, simd ? simd->name : kernels::scalar().name);
}

TEST(Kernels, EnvironmentOverridesAutomatic) {
  ::setenv("METAFUSE_KERNELS", "scalar", 1);
  EXPECT_EQ(kernels::active().name, "scalar");
  EXPECT_EQ(kernels::select(kernels::Preference::simd).name,
            kernels::simd() ? kernels::simd()->name : kernels::scalar().name);
  ::setenv("METAFUSE_KERNELS", "bogus", 1);
  EXPECT_THROW(kernels::active(), ConfigError);
  ::unsetenv("METAFUSE_KERNELS");
}
