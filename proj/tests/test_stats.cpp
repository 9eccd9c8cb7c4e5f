#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "obench/stats.hpp"

using namespace obench;

namespace {

// P(0 < T < x) for Student t with df degrees of freedom, by composite Simpson.
double t_half_cdf(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  const auto pdf = [&](double t) { return c * std::pow(1 + t * t / df, -(df + 1) / 2); };
  const int n = 20000;
  const double h = x / n;
  double s = pdf(0) + pdf(x);
  for (int i = 1; i < n; ++i) s += pdf(i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

double t_quantile_975(double df) {
  double lo = 0.0, hi = 20.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = (lo + hi) / 2;
    (t_half_cdf(mid, df) < 0.475 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace

TEST(StudentT, TableMatchesNumericalQuantiles) {
  for (std::size_t df = 1; df <= 120; ++df) {
    EXPECT_NEAR(student_t975(df), t_quantile_975(static_cast<double>(df)), 6e-7) << "df=" << df;
  }
}

TEST(StudentT, KnownValuesAndTail) {
  EXPECT_DOUBLE_EQ(student_t975(1), 12.706205);
  EXPECT_DOUBLE_EQ(student_t975(39), 2.022691);
  EXPECT_THROW(student_t975(0), InvalidArgument);
  double prev = student_t975(1);
  for (std::size_t df = 2; df <= 2000; ++df) {
    const double t = student_t975(df);
    EXPECT_LT(t, prev);
    EXPECT_GT(t, kNormal975);
    prev = t;
  }
  // Interpolation beyond the table stays close to the true quantile.
  for (double df : {150.0, 300.0, 1000.0}) {
    EXPECT_NEAR(student_t975(static_cast<std::size_t>(df)), t_quantile_975(df), 1e-4);
  }
}

TEST(MeanCi, OneToFive) {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  const MeanCi ci = mean_ci95(xs);
  EXPECT_DOUBLE_EQ(ci.mean, 3.0);
  EXPECT_NEAR(ci.half_width, 1.96324, 1e-5);
}

TEST(MeanCi, ConstantSamplesHaveZeroWidth) {
  const std::vector<double> xs(40, 0.1);
  const MeanCi ci = mean_ci95(xs);
  EXPECT_EQ(ci.mean, 0.1);
  EXPECT_EQ(ci.half_width, 0.0);
}

TEST(MeanCi, FortyRepetitionsUsesDf39) {
  std::vector<double> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(i % 2 ? 1.0 : 3.0);
  // sd = sqrt(40/39), half width = t39 * sd / sqrt(40)
  const MeanCi ci = mean_ci95(xs);
  EXPECT_DOUBLE_EQ(ci.mean, 2.0);
  EXPECT_NEAR(ci.half_width, 2.022691 * std::sqrt(40.0 / 39.0) / std::sqrt(40.0), 1e-12);
}

TEST(MeanCi, NeedsTwoSamples) {
  EXPECT_THROW(mean_ci95(std::vector<double>{1.0}), InsufficientData);
  EXPECT_THROW(mean_ci95(std::vector<double>{}), InsufficientData);
  EXPECT_THROW(mean_of(std::vector<double>{}), InsufficientData);
}
