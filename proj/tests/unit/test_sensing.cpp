#include <gtest/gtest.h>

#include <cmath>

#include "gencs/sensing.hpp"

using namespace gencs;

TEST(MakeOperator, OneByOneIsStandardNormal) {
  double sum2 = 0.0;
  for (int s = 0; s < 4000; ++s) sum2 += std::pow(make_operator(1, 1, s).A(0, 0), 2);
  EXPECT_NEAR(sum2 / 4000.0, 1.0, 0.08);
}

TEST(MakeOperator, EntryVariance) {
  const auto op = make_operator(50, 200, 3);
  const double mean = op.A.mean();
  const double var = (op.A.array() - mean).square().sum() / static_cast<double>(op.A.size() - 1);
  EXPECT_GE(var, 0.9 / 200.0);
  EXPECT_LE(var, 1.1 / 200.0);
  EXPECT_EQ(op.m, 50u);
  EXPECT_EQ(op.n, 200u);
  EXPECT_DOUBLE_EQ(op.sampling_rate(), 0.25);
}

TEST(MakeOperator, Reproducible) {
  EXPECT_EQ(make_operator(5, 9, 17).A, make_operator(5, 9, 17).A);
  EXPECT_NE(make_operator(5, 9, 17).A, make_operator(5, 9, 18).A);
  EXPECT_NE(make_operator(5, 9, 17, 0).A, make_operator(5, 9, 17, 1).A);
}

TEST(MakeOperator, ZeroDimsRejected) {
  EXPECT_THROW(make_operator(0, 4, 1), ParameterError);
  EXPECT_THROW(make_operator(4, 0, 1), ParameterError);
}

TEST(MakeOperator, OverdeterminedAccepted) {
  const auto op = make_operator(10, 4, 1);
  EXPECT_TRUE(op.overdetermined());
}

TEST(Measure, ZeroSignalNoiseless) {
  const auto op = make_operator(6, 10, 1);
  Rng r(1);
  EXPECT_EQ(measure(op, Vector::Zero(10), {0.0}, r), Vector::Zero(6));
}

TEST(Measure, NoiselessEqualsMatvecAndDrawsNothing) {
  const auto op = make_operator(6, 10, 1);
  Rng r(1);
  Rng xr(2);
  const Vector x = gaussian_vector(xr, 10, 0.0, 1.0);
  EXPECT_EQ(measure(op, x, {0.0}, r), matvec(op.A, x));
  EXPECT_EQ(r.counter(), 0u);
}

TEST(Measure, NoiseVariance) {
  const auto op = make_operator(40, 60, 5);
  const Vector x = Vector::Constant(60, 0.5);
  const Vector ax = op.A * x;
  const double sigma = 0.3;
  Rng r(8);
  double total = 0.0;
  for (int t = 0; t < 2000; ++t) total += (measure(op, x, {sigma}, r) - ax).squaredNorm() / 40.0;
  const double mean = total / 2000.0;
  EXPECT_GE(mean, 0.95 * sigma * sigma);
  EXPECT_LE(mean, 1.05 * sigma * sigma);
}

TEST(Measure, Errors) {
  const auto op = make_operator(3, 4, 1);
  Rng r(1);
  EXPECT_THROW(measure(op, Vector::Zero(5), {0.0}, r), ShapeError);
  EXPECT_THROW(measure(op, Vector::Zero(4), {-1.0}, r), ParameterError);
}

TEST(SnrToSigma, ZeroDbIsUnitRatio) {
  const auto op = make_operator(8, 16, 2);
  const Vector x = Vector::Constant(16, 0.3);
  const double sigma = snr_to_sigma(0.0, op, x);
  EXPECT_NEAR(sigma * sigma, (op.A * x).squaredNorm() / 8.0, 1e-15);
}

TEST(SnrToSigma, InfiniteSnrIsNoiseless) {
  const auto op = make_operator(8, 16, 2);
  const Vector x = Vector::Constant(16, 0.3);
  EXPECT_EQ(snr_to_sigma(INFINITY, op, x), 0.0);
  EXPECT_LT(snr_to_sigma(300.0, op, x), 1e-14);
}

TEST(SnrToSigma, TenDbWithUnitPower) {
  // Rows scaled so that ‖Ax‖² = m exactly.
  Matrix a = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) a(i, i) = 1.0;
  const auto op = SensingOperator::from_matrix(a);
  EXPECT_NEAR(snr_to_sigma(10.0, op, Vector::Ones(4)), std::pow(10.0, -0.5), 1e-15);
}

TEST(SnrToSigma, DegenerateSignal) {
  const auto op = make_operator(3, 4, 1);
  EXPECT_THROW(snr_to_sigma(10.0, op, Vector::Zero(4)), DegenerateSignalError);
  EXPECT_THROW(snr_to_sigma(NAN, op, Vector::Ones(4)), ParameterError);
}
