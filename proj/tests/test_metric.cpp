#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "edgemetric/metric.hpp"

using namespace edgemetric;

namespace {

std::vector<double> random_histogram(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> h(m);
  double sum = 0.0;
  for (double& v : h) sum += (v = u(rng) * (u(rng) < 0.3 ? 0.0 : 1.0));
  if (sum == 0.0) h[0] = sum = 1.0;
  for (double& v : h) v /= sum;
  return h;
}

MetricModel random_model(std::mt19937_64& rng, KernelType kernel) {
  FeatureConfig features{{3, 3, 3, 4}, ScaleConfig{{3, 5}, 8}};
  MetricModel model = zero_model(features, kernel, 5, 0.2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& s : model.scales) {
    for (double& a : s.alpha) a = u(rng);
    for (double& b : s.beta) b = u(rng);
  }
  return model;
}

// Straight-line evaluation of the transform and kernel, written independently
// of the library code.
double reference_lbm(const std::vector<double>& u, const std::vector<double>& v,
                     const MetricModel& model, int scale) {
  const auto& p = model.scales[scale];
  double sq = 0.0, abs_sum = 0.0;
  for (int n = 0; n < model.n; ++n) {
    double zu = p.alpha[n], zv = p.alpha[n];
    for (int m = 0; m < model.m; ++m) {
      zu += p.beta[n * model.m + m] * u[m];
      zv += p.beta[n * model.m + m] * v[m];
    }
    const double tu = 1.0 / (1.0 + std::exp(-zu));
    const double tv = 1.0 / (1.0 + std::exp(-zv));
    sq += (tu - tv) * (tu - tv);
    abs_sum += std::abs(tu - tv);
  }
  if (model.kernel == KernelType::kLinear) return abs_sum / model.n;
  return 1.0 - std::exp(-sq / (2.0 * model.sigma * model.sigma));
}

}  // namespace

TEST(ChiSquare, Examples) {
  const std::vector<double> a = {0.5, 0.5}, b = {0.25, 0.75};
  EXPECT_EQ(chi_square(a, a), 0.0);
  const std::vector<double> e0 = {1, 0}, e1 = {0, 1};
  EXPECT_DOUBLE_EQ(chi_square(e0, e1), 1.0);
  EXPECT_NEAR(chi_square(a, b), 0.5 * (0.0625 / 0.75 + 0.0625 / 1.25), 1e-15);
  EXPECT_NEAR(chi_square(a, b), 0.066667, 1e-6);
}

TEST(ChiSquare, Errors) {
  const std::vector<double> a = {0.5, 0.5}, b = {1.0}, neg = {-0.5, 1.5};
  EXPECT_THROW(chi_square(a, b), Error);
  EXPECT_THROW(chi_square(a, neg), Error);
}

TEST(ChiSquare, PropertiesOnRandomPairs) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto u = random_histogram(rng, 20);
    const auto v = random_histogram(rng, 20);
    const double d = chi_square(u, v);
    EXPECT_EQ(d, chi_square(v, u));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_GT(d, 1e-12);
    EXPECT_LT(chi_square(u, u), 1e-12);
  }
}

TEST(ChiSquareCombined, EqualWeights) {
  const ChiSquareModel eq = ChiSquareModel::equal(4);
  ASSERT_EQ(eq.weights.size(), 16u);
  for (double w : eq.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 16.0);
  std::vector<double> d(16, 0.0);
  EXPECT_EQ(chi_square_combined(d, eq), 0.0);
  d[5] = 0.8;
  EXPECT_NEAR(chi_square_combined(d, eq), 0.05, 1e-15);
  std::fill(d.begin(), d.end(), 1.0);
  EXPECT_NEAR(chi_square_combined(d, eq), 1.0, 1e-15);
}

TEST(ChiSquareModel, ValidateRejectsNegativeWeights) {
  ChiSquareModel m = ChiSquareModel::equal(2);
  m.mode = ChiSquareModel::Mode::kLearned;
  m.weights[0] = -0.1;
  EXPECT_THROW(m.validate(), Error);
}

TEST(Logistic, Examples) {
  const std::vector<double> u = {0.5, 0.5};
  const std::vector<double> zero_a(3, 0.0), zero_b(6, 0.0);
  for (double v : logistic_transform(u, zero_a, zero_b)) EXPECT_EQ(v, 0.5);

  const std::vector<double> big = {40.0}, b0 = {0.0, 0.0};
  const auto sat = logistic_transform(u, big, b0);
  EXPECT_NEAR(sat[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(sat[0]));

  const std::vector<double> one = {1.0}, ones = {1.0, 1.0};
  EXPECT_NEAR(logistic_transform(u, one, ones)[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(logistic_transform(u, one, ones)[0], 0.880797, 1e-6);
}

TEST(Logistic, ExtremePreActivationsStayFinite) {
  EXPECT_EQ(logistic(-1e6), 0.0);
  EXPECT_EQ(logistic(1e6), 1.0);
  EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
}

TEST(Logistic, DimensionMismatch) {
  const std::vector<double> u = {0.5, 0.5}, a = {0.0}, b = {0.0};
  EXPECT_THROW(logistic_transform(u, a, b), Error);
}

TEST(KernelDistance, Examples) {
  const std::vector<double> a = {0.3, 0.7, 0.1};
  EXPECT_EQ(kernel_distance(a, a, KernelType::kRbf, 0.2), 0.0);
  EXPECT_EQ(kernel_distance(a, a, KernelType::kLinear, 0.2), 0.0);
  // Squared distance 2 sigma^2 with sigma = 0.2: offset one coordinate by
  // sqrt(0.08).
  std::vector<double> b = a;
  b[0] += std::sqrt(2.0 * 0.2 * 0.2);
  EXPECT_NEAR(kernel_distance(a, b, KernelType::kRbf, 0.2), 1.0 - std::exp(-1.0), 1e-12);
  EXPECT_NEAR(kernel_distance(a, b, KernelType::kRbf, 0.2), 0.632121, 1e-6);
  EXPECT_THROW(kernel_distance(a, b, KernelType::kRbf, 0.0), Error);
}

TEST(KernelDistance, RbfMonotoneAndBounded) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(16), b(16);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    const double d = kernel_distance(a, b, KernelType::kRbf, 0.2);
    EXPECT_EQ(d, kernel_distance(b, a, KernelType::kRbf, 0.2));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);  // saturates to exactly 1 in double precision
  }
  const std::vector<double> o(4, 0.0);
  double prev = 0.0;
  for (int k = 1; k <= 60; ++k) {
    std::vector<double> b(4, 0.0);
    b[0] = 0.01 * k;
    const double d = kernel_distance(o, b, KernelType::kRbf, 0.2);
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(LbmDistance, ZeroOnIdenticalAndSymmetric) {
  std::mt19937_64 rng(3);
  for (KernelType k : {KernelType::kRbf, KernelType::kLinear}) {
    const MetricModel model = random_model(rng, k);
    for (int i = 0; i < 100; ++i) {
      const auto u = random_histogram(rng, model.m);
      const auto v = random_histogram(rng, model.m);
      EXPECT_EQ(lbm_distance(u, u, model, 0), 0.0);
      EXPECT_EQ(lbm_distance(u, v, model, 1), lbm_distance(v, u, model, 1));
    }
  }
}

TEST(LbmDistance, MatchesStraightLineReference) {
  std::mt19937_64 rng(4);
  for (KernelType k : {KernelType::kRbf, KernelType::kLinear}) {
    for (int trial = 0; trial < 20; ++trial) {
      const MetricModel model = random_model(rng, k);
      const auto u = random_histogram(rng, model.m);
      const auto v = random_histogram(rng, model.m);
      for (int s = 0; s < model.scale_count(); ++s)
        EXPECT_NEAR(lbm_distance(u, v, model, s), reference_lbm(u, v, model, s), 1e-12);
    }
  }
}

TEST(LbmDistance, ScaleOutOfRange) {
  std::mt19937_64 rng(5);
  const MetricModel model = random_model(rng, KernelType::kRbf);
  const auto u = random_histogram(rng, model.m);
  EXPECT_THROW(lbm_distance(u, u, model, 2), Error);
}

TEST(LbmCombined, Examples) {
  const std::vector<double> same = {0.3, 0.3, 0.3, 0.3};
  EXPECT_DOUBLE_EQ(lbm_combined(same), 0.3);
  const std::vector<double> one = {0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(lbm_combined(one), 0.25);
  const std::vector<double> ramp = {0.2, 0.4, 0.6, 0.8};
  EXPECT_NEAR(lbm_combined(ramp), 0.5, 1e-15);
  EXPECT_THROW(lbm_combined(std::vector<double>{}), Error);
}

TEST(MetricModel, ValidateCatchesBadShapes) {
  std::mt19937_64 rng(6);
  MetricModel model = random_model(rng, KernelType::kRbf);
  EXPECT_NO_THROW(model.validate());
  MetricModel bad = model;
  bad.sigma = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = model;
  bad.scales[0].beta.pop_back();
  EXPECT_THROW(bad.validate(), Error);
  bad = model;
  bad.scales[1].alpha[0] = std::nan("");
  EXPECT_THROW(bad.validate(), Error);
}
