#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "metafuse/error.hpp"
#include "metafuse/softmax_classifier.hpp"
#include "oracles.hpp"

using namespace metafuse;

namespace {

struct Problem {
  Matrix<double> x;
  std::vector<int> y;
  std::vector<std::string> classes;
};

Problem random_problem(Rng& rng, std::size_t n, std::size_t d, std::size_t k) {
  Problem p{Matrix<double>(n, d), std::vector<int>(n), {}};
  for (double& v : p.x.values()) v = standard_normal(rng);
  for (std::size_t i = 0; i < n; ++i) p.y[i] = static_cast<int>(i < k ? i : uniform_below(rng, k));
  for (std::size_t c = 0; c < k; ++c) p.classes.push_back("c" + std::to_string(c));
  return p;
}

Problem two_blobs(Rng& rng, std::size_t n) {
  Problem p{Matrix<double>(n, 2), std::vector<int>(n), {"neg", "pos"}};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double cx = y ? 3.0 : -3.0;
    p.x(i, 0) = cx + 0.5 * standard_normal(rng);
    p.x(i, 1) = cx + 0.5 * standard_normal(rng);
    p.y[i] = y;
  }
  return p;
}

std::vector<const kernels::KernelSet*> all_kernels() {
  std::vector<const kernels::KernelSet*> ks = {&kernels::scalar()};
  if (kernels::simd() != nullptr) ks.push_back(kernels::simd());
  return ks;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(1e-12, std::sqrt(na) + std::sqrt(nb));
}

}  // namespace

TEST(Softmax, KnownValues) {
  const auto p = softmax(std::vector<double>{1.0, 2.0, 3.0});
  const long double e1 = std::exp(1.0L), e2 = std::exp(2.0L), e3 = std::exp(3.0L);
  const long double s = e1 + e2 + e3;
  EXPECT_NEAR(p[0], static_cast<double>(e1 / s), 1e-15);
  EXPECT_NEAR(p[1], static_cast<double>(e2 / s), 1e-15);
  EXPECT_NEAR(p[2], static_cast<double>(e3 / s), 1e-15);
  EXPECT_NEAR(p[0], 0.09003057317038046, 1e-6);
  EXPECT_NEAR(p[2], 0.6652409557748219, 1e-6);
}

TEST(Softmax, SumsToOneAndShiftInvariantProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> z(1 + uniform_below(rng, 12));
    for (double& v : z) v = 20.0 * standard_normal(rng);
    const auto p = softmax(z);
    ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    const double shift = 100.0 * standard_normal(rng);
    auto zs = z;
    for (double& v : zs) v += shift;
    const auto q = softmax(zs);
    for (std::size_t i = 0; i < p.size(); ++i) ASSERT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Softmax, ExtremeLogitsStayFinite) {
  const auto p = softmax(std::vector<double>{1000.0, -1000.0, 999.0});
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(p[0] + p[2], 1.0, 1e-15);
  EXPECT_EQ(p[1], 0.0);
}

TEST(Softmax, RejectsBadInput) {
  EXPECT_THROW(softmax(std::vector<double>{}), DomainError);
  EXPECT_THROW(softmax(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}), DomainError);
  EXPECT_THROW(softmax(std::vector<double>{std::nan("")}), DomainError);
}

TEST(Softmax, ArgmaxTiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0);
}

TEST(Objective, LossMatchesDirectFormula) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + uniform_below(rng, 30), d = 1 + uniform_below(rng, 8), k = 2 + uniform_below(rng, 4);
    auto p = random_problem(rng, n, d, std::min(k, n));
    const std::size_t kk = p.classes.size();
    std::vector<double> params(kk * d + kk);
    for (double& v : params) v = standard_normal(rng);
    for (const auto* ks : all_kernels()) {
      const auto obj = cross_entropy_objective(p.x, p.y, kk, params, *ks);
      EXPECT_NEAR(obj.loss, oracle::cross_entropy(p.x.values(), n, d, p.y, kk, params), 1e-12 * (1 + obj.loss));
    }
  }
}

TEST(Objective, GradientMatchesCentralDifferences) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + uniform_below(rng, 46), d = 1 + uniform_below(rng, 10), k = 2 + uniform_below(rng, 4);
    const auto p = random_problem(rng, n, d, k);
    std::vector<double> params(k * d + k);
    for (double& v : params) v = standard_normal(rng);
    const auto fd = oracle::central_difference(
        [&](std::span<const double> w) { return oracle::cross_entropy(p.x.values(), n, d, p.y, k, w); }, params);
    for (const auto* ks : all_kernels()) {
      const auto obj = cross_entropy_objective(p.x, p.y, k, params, *ks);
      EXPECT_LT(relative_error(obj.gradient, fd), 1e-5) << "trial " << trial << " kernel " << ks->name;
    }
  }
}

TEST(Standardizer, ConstantColumnsKeepUnitScale) {
  Matrix<double> x(3, 2, {1.0, 5.0, 2.0, 5.0, 3.0, 5.0});
  const auto s = Standardizer::fit(x);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scale[0], std::sqrt(2.0 / 3.0));
  EXPECT_DOUBLE_EQ(s.scale[1], 1.0);
  const auto xs = s.apply(x);
  EXPECT_EQ(xs(0, 1), 0.0);
  EXPECT_THROW(s.apply(Matrix<double>(1, 3)), DomainError);
}

TEST(Train, BiasOnlyRecoversClassPriors) {
  Rng rng(34);
  const std::size_t n = 600;
  const std::vector<double> priors = {0.5, 0.3, 0.15, 0.05};
  Matrix<double> x(n, 1, 7.0);  // constant column: standardizes to zero
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform_unit(rng);
    double acc = 0.0;
    y[i] = 3;
    for (int c = 0; c < 4; ++c) {
      acc += priors[static_cast<std::size_t>(c)];
      if (u < acc) {
        y[i] = c;
        break;
      }
    }
  }
  std::vector<double> empirical(4, 0.0);
  for (int v : y) empirical[static_cast<std::size_t>(v)] += 1.0 / static_cast<double>(n);

  const auto r = train(x, y, {"a", "b", "c", "d"}, TrainConfig{});
  EXPECT_TRUE(r.trace.converged);
  const auto p = softmax(r.model.bias);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(p[c], empirical[c], 1e-3);
  const auto proba = predict_proba(r.model, x);
  EXPECT_NEAR(proba(0, 3), empirical[3], 1e-3);
}

TEST(Train, SeparableBlobsReachFullTrainingAccuracy) {
  Rng rng(35);
  const auto p = two_blobs(rng, 200);
  const auto r = train(p.x, p.y, p.classes, TrainConfig{});
  EXPECT_LE(r.trace.epochs, 2000);
  const auto pred = predict(r.model, p.x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == p.y[i];
  EXPECT_GE(static_cast<double>(correct) / 200.0, 0.99);
}

TEST(Train, LossIsMonotoneWithBacktracking) {
  Rng rng(36);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_problem(rng, 40, 5, 3);
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.learning_rate = 5.0;
    const auto r = train(p.x, p.y, p.classes, cfg);
    for (std::size_t i = 1; i < r.trace.loss.size(); ++i) ASSERT_LE(r.trace.loss[i], r.trace.loss[i - 1]);
    EXPECT_GT(r.trace.step_halvings, 0);
  }
}

TEST(Train, StopsOnGradientTolerance) {
  Rng rng(37);
  const auto p = random_problem(rng, 50, 3, 3);
  TrainConfig cfg;
  cfg.gradient_tolerance = 1e-2;
  const auto r = train(p.x, p.y, p.classes, cfg);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LT(r.trace.gradient_inf_norm, 1e-2);
  EXPECT_LT(r.trace.epochs, cfg.max_epochs);
  EXPECT_EQ(r.trace.loss.size(), static_cast<std::size_t>(r.trace.epochs) + 1);
}

TEST(Train, HonoursEpochBudget) {
  Rng rng(38);
  const auto p = random_problem(rng, 50, 3, 3);
  TrainConfig cfg;
  cfg.max_epochs = 7;
  cfg.gradient_tolerance = 1e-15;
  const auto r = train(p.x, p.y, p.classes, cfg);
  EXPECT_FALSE(r.trace.converged);
  EXPECT_EQ(r.trace.epochs, 7);
}

TEST(Train, ConstantStepDivergenceIsReported) {
  Rng rng(39);
  const auto p = random_problem(rng, 30, 4, 3);
  TrainConfig cfg;
  cfg.backtracking = false;
  cfg.learning_rate = std::numeric_limits<double>::max();
  EXPECT_THROW(train(p.x, p.y, p.classes, cfg), DivergenceError);
}

TEST(Train, IsDeterministicAndKernelIndependent) {
  Rng rng(40);
  const auto p = random_problem(rng, 120, 9, 4);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.kernels = kernels::Preference::scalar;
  const auto a = train(p.x, p.y, p.classes, cfg);
  const auto b = train(p.x, p.y, p.classes, cfg);
  EXPECT_EQ(a.model.weights, b.model.weights);
  EXPECT_EQ(a.model.bias, b.model.bias);
  cfg.kernels = kernels::Preference::simd;
  const auto c = train(p.x, p.y, p.classes, cfg);
  for (std::size_t i = 0; i < a.model.weights.size(); ++i) {
    EXPECT_NEAR(a.model.weights.values()[i], c.model.weights.values()[i], 1e-8);
  }
}

TEST(Train, PreconditionsAndEmptyClasses) {
  Rng rng(41);
  auto p = random_problem(rng, 10, 2, 2);
  EXPECT_THROW(train(Matrix<double>(10, 0), p.y, p.classes, TrainConfig{}), DomainError);
  EXPECT_THROW(train(p.x, std::vector<int>(3, 0), p.classes, TrainConfig{}), DomainError);
  EXPECT_THROW(train(Matrix<double>(1, 2), std::vector<int>{0}, p.classes, TrainConfig{}), DomainError);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(train(p.x, p.y, p.classes, bad), ConfigError);

  TrainConfig quick;
  quick.max_epochs = 20;
  const auto r = train(p.x, p.y, {"c0", "c1", "never"}, quick);
  EXPECT_EQ(r.trace.empty_classes, (std::vector<int>{2}));
}

TEST(Model, SaveLoadRoundTrip) {
  Rng rng(42);
  const auto p = random_problem(rng, 60, 5, 3);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  auto r = train(p.x, p.y, p.classes, cfg);
  r.model.layout = {"vgg16", 3, {{"age", 0, 1}, {"sex", 1, 1}}};
  const auto path = std::filesystem::temp_directory_path() / "metafuse_model.mfsm";
  save_model(r.model, path);
  const auto m = load_model(path);
  EXPECT_EQ(m.weights, r.model.weights);
  EXPECT_EQ(m.bias, r.model.bias);
  EXPECT_EQ(m.preprocess.mean, r.model.preprocess.mean);
  EXPECT_EQ(m.preprocess.scale, r.model.preprocess.scale);
  EXPECT_EQ(m.class_names, p.classes);
  EXPECT_EQ(m.layout, r.model.layout);
  EXPECT_EQ(predict_proba(m, p.x), predict_proba(r.model, p.x));
  EXPECT_DOUBLE_EQ(m.weight(2, 1), r.model.weights(1, 2));

  auto bytes = std::vector<char>();
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  bytes[bytes.size() / 2] ^= 0x40;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_THROW(load_model(path), ChecksumError);
  bytes[0] = 'X';
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_THROW(load_model(path), MagicMismatchError);
  std::filesystem::remove(path);
}
