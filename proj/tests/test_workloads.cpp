#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "obench/workloads.hpp"
#include "oracles.hpp"

using namespace obench;

TEST(Matrix, RejectsBadShapes) {
  EXPECT_THROW(Matrix(0, 3), InvalidArgument);
  EXPECT_THROW(Matrix(2, 0), InvalidArgument);
  EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_NO_THROW(Matrix(2, 2, {1.0, 2.0, 3.0, 4.0}));
}

TEST(GenMatrix, MatchesIndependentGenerator) {
  // Values from a separate Python rendering of SplitMix64 + xorshift64*.
  const Matrix m0 = gen_matrix(0, 2);
  EXPECT_EQ(m0(0, 0), 3.483348134283938);
  EXPECT_EQ(m0(0, 1), 1.8691389606829487);
  EXPECT_EQ(m0(1, 0), 1.7022433404894404);
  EXPECT_EQ(m0(1, 1), 3.876765236393629);
  const Matrix m1 = gen_matrix(1, 2);
  EXPECT_EQ(m1(0, 0), 3.2940467218753646);
  EXPECT_EQ(m1(1, 1), 3.2311471092582926);
  const Matrix m42 = gen_matrix(42, 2);
  EXPECT_EQ(m42(0, 1), 1.5626318272656206);
  EXPECT_EQ(m42(1, 0), 1.4861061377100522);
}

TEST(GenMatrix, DeterministicAndInRange) {
  const Matrix a = gen_matrix(7, 3);
  const Matrix b = gen_matrix(7, 3);
  EXPECT_TRUE(bit_equal(a, b));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double lo = i == j ? 4.0 : 1.0;
      EXPECT_GE(a(i, j), lo);
      EXPECT_LT(a(i, j), lo + 1.0);
    }
  }
  EXPECT_FALSE(bit_equal(gen_matrix(7, 3), gen_matrix(8, 3)));
  EXPECT_THROW(gen_matrix(1, 0), InvalidArgument);
}

TEST(GenMatrix, DiagonalDominanceHoldsForSmallSizesOnly) {
  // Off-diagonal row sums stay below 2(n-1) and the diagonal is at least
  // n+1, so strict dominance is guaranteed only up to n=3.
  for (std::size_t n : {2, 3}) {
    const Matrix m = gen_matrix(5, n);
    for (std::size_t i = 0; i < n; ++i) {
      double off = 0.0;
      for (std::size_t j = 0; j < n; ++j) off += j == i ? 0.0 : std::abs(m(i, j));
      EXPECT_GT(std::abs(m(i, i)), off);
    }
  }
}

TEST(Matmul, HandExample) {
  const Matrix a(2, 2, {1, 2, 3, 4});
  const Matrix b(2, 2, {5, 6, 7, 8});
  EXPECT_EQ(matmul(a, b), Matrix(2, 2, {19, 22, 43, 50}));
  EXPECT_EQ(matmul(Matrix::identity(3), gen_matrix(3, 3)), gen_matrix(3, 3));
}

TEST(Matmul, RectangularAndMismatch) {
  const Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
  const Matrix b(3, 1, {1, 0, -1});
  EXPECT_EQ(matmul(a, b), Matrix(2, 1, {-2, -2}));
  EXPECT_THROW(matmul(a, a), InvalidArgument);
}

TEST(Matmul, AgreesWithNaiveOracle) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = dim(rng), k = dim(rng), c = dim(rng);
    Matrix a(r, k), b(k, c);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (double& x : a.data()) x = u(rng);
    for (double& x : b.data()) x = u(rng);
    const Matrix got = matmul(a, b);
    const Matrix want = oracle::naive_matmul(a, b);
    // Mixed-sign sums cancel, so compare against the magnitude of the terms.
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        double mag = 0.0;
        for (std::size_t t = 0; t < k; ++t) mag += std::abs(a(i, t) * b(t, j));
        EXPECT_LE(std::abs(got(i, j) - want(i, j)), 1e-9 * mag);
      }
    }
  }
  const Matrix g = gen_matrix(3, 100);
  EXPECT_LE(oracle::max_rel_diff(matmul(g, g), oracle::naive_matmul(g, g)), 1e-9);
}

TEST(Invert, HandExamples) {
  EXPECT_EQ(invert(Matrix::identity(5)), Matrix::identity(5));
  EXPECT_EQ(invert(Matrix(2, 2, {2, 0, 0, 4})), Matrix(2, 2, {0.5, 0, 0, 0.25}));
  const Matrix inv = invert(Matrix(2, 2, {4, 7, 2, 6}));
  const Matrix want(2, 2, {0.6, -0.7, -0.2, 0.4});
  EXPECT_LE(oracle::max_rel_diff(inv, want), 1e-14);
}

TEST(Invert, NeedsPivoting) {
  // Zero leading entry: only row exchange makes this invertible by elimination.
  const Matrix a(3, 3, {0, 1, 2, 1, 0, 3, 4, -3, 8});
  EXPECT_LE(identity_residual(a, invert(a)), 1e-12);
}

TEST(Invert, ResidualOnGeneratedMatrices) {
  const Matrix a = gen_matrix(9, 100);
  EXPECT_LE(identity_residual(a, invert(a)), 1e-8);
  const Matrix b = gen_matrix(1, 400);
  EXPECT_LE(identity_residual(b, invert(b)), 1e-8);
}

TEST(Invert, SingularAndNonSquare) {
  EXPECT_THROW(invert(Matrix(2, 2, {1, 2, 2, 4})), SingularMatrix);
  EXPECT_THROW(invert(Matrix(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9})), SingularMatrix);
  EXPECT_THROW(invert(Matrix(2, 3)), InvalidArgument);
  // SingularMatrix is a domain error.
  EXPECT_THROW(invert(Matrix(1, 1, {0.0})), DomainError);
}

TEST(Ln, Examples) {
  EXPECT_EQ(elementwise_ln(Matrix(2, 2, {1, 1, 1, 1})), Matrix(2, 2));
  const Matrix e = elementwise_ln(Matrix(1, 2, {std::exp(1.0), std::exp(-3.0)}));
  EXPECT_NEAR(e(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(e(0, 1), -3.0, 1e-15);
  const Matrix g = gen_matrix(2, 10);
  const Matrix l = elementwise_ln(g);
  for (std::size_t i = 0; i < g.data().size(); ++i) EXPECT_EQ(l.data()[i], std::log(g.data()[i]));
}

TEST(Ln, DomainErrors) {
  EXPECT_THROW(elementwise_ln(Matrix(1, 2, {1.0, 0.0})), DomainError);
  EXPECT_THROW(elementwise_ln(Matrix(1, 1, {-2.0})), DomainError);
  EXPECT_THROW(elementwise_ln(Matrix(1, 1, {std::nan("")})), DomainError);
}

TEST(ApplyOp, MulSquaresItsInput) {
  const Matrix a(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(apply_op(OpKind::kMul, a), Matrix(2, 2, {7, 10, 15, 22}));
  EXPECT_THROW(apply_op(OpKind::kMul, Matrix(2, 3)), InvalidArgument);
}

TEST(LocalExecute, ReturnsResultAndTime) {
  const auto r = local_execute(OpKind::kInv, gen_matrix(5, 64));
  EXPECT_LE(identity_residual(gen_matrix(5, 64), r.result), 1e-10);
  EXPECT_GT(r.seconds, 0.0);
  EXPECT_EQ(local_execute(OpKind::kMul, Matrix::identity(2)).result, Matrix::identity(2));
  EXPECT_EQ(local_execute(OpKind::kLn, Matrix(1, 1, {1.0})).result, Matrix(1, 1));
}

TEST(OpKind, NamesRoundTrip) {
  for (OpKind op : kAllOps) EXPECT_EQ(parse_op(to_string(op)), op);
  EXPECT_FALSE(parse_op("MUL").has_value());
  EXPECT_FALSE(parse_op("").has_value());
}
