#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gencs/theory.hpp"
#include "oracles.hpp"

using namespace gencs;

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize(0.3, 2), 0.25);
  EXPECT_EQ(quantize(0.75, 2), 0.75);
  EXPECT_EQ(quantize(1.0, 3), 1.0);
  EXPECT_EQ(quantize(0.0, 1), 0.0);
}

TEST(Quantize, IdempotentBoundedMonotone) {
  Rng r(1);
  for (int t = 0; t < 1000; ++t) {
    const unsigned b = 1 + static_cast<unsigned>(r.uniform_index(12));
    const double x = r.uniform();
    const double y = x + 0.1 * r.uniform();
    const double q = quantize(x, b);
    EXPECT_EQ(quantize(q, b), q);
    EXPECT_GE(x - q, 0.0);
    EXPECT_LT(x - q, std::ldexp(1.0, -static_cast<int>(b)));
    EXPECT_LE(q, quantize(y, b));
  }
  const Vector v = (Vector(3) << 0.3, 0.6, 0.99).finished();
  EXPECT_EQ(quantize_vec(v, 1), (Vector(3) << 0.0, 0.5, 0.5).finished());
}

namespace {

Theorem1Params example(double delta, double sigma) {
  Theorem1Params p;
  p.k = 25;
  p.n = 400;
  p.m = 100;
  p.L = 1.0;
  p.delta = delta;
  p.sigma = sigma;
  p.eta = 4.0;
  p.upsilon = 0.25;
  return p;
}

}  // namespace

TEST(Theorem1, LeadingTermExample) {
  const auto b = theorem1_bound(example(0.01, 0.0));
  EXPECT_NEAR(b.alpha_parts[2], 0.15, 1e-15);
  EXPECT_EQ(b.noise_term, 0.0);
  EXPECT_EQ(b.noise_cross_term, 0.0);
  EXPECT_EQ(b.alpha_parts[1], 0.0);
}

TEST(Theorem1, NoiselessMatchesSimplifiedBound) {
  Rng r(2);
  for (int t = 0; t < 100; ++t) {
    Theorem1Params p;
    p.k = 1 + r.uniform_index(40);
    p.eta = 2.5 + 6.0 * r.uniform();
    p.upsilon = (0.05 + 0.9 * r.uniform()) * (1.0 - 2.0 / p.eta);
    p.m = static_cast<std::size_t>(std::ceil(p.eta * static_cast<double>(p.k)));
    p.eta = static_cast<double>(p.m) / static_cast<double>(p.k);
    // Keep m >= eta*k under rounding.
    while (p.eta * static_cast<double>(p.k) > static_cast<double>(p.m)) p.eta = std::nextafter(p.eta, 0.0);
    p.n = p.m + r.uniform_index(1000);
    p.L = 0.1 + 5.0 * r.uniform();
    p.delta = std::pow(10.0, -0.5 - 3.0 * r.uniform());
    p.sigma = 0.0;
    const double want = oracle::noiseless_bound(p.L, p.eta, p.upsilon, p.delta, static_cast<double>(p.k),
                                                static_cast<double>(p.n));
    EXPECT_NEAR(theorem1_bound(p).error_bound, want, 1e-12 * want);
  }
}

TEST(Theorem1, NoiseTermGrowsAsDeltaShrinks) {
  double prev = 0.0;
  for (double d : {0.1, 0.01, 0.001}) {
    const auto b = theorem1_bound(example(d, 0.05));
    EXPECT_GT(b.noise_term, prev);
    prev = b.noise_term;
  }
}

TEST(Theorem1, ProbabilityAtMostOneAndVacuousFlag) {
  for (double d : {0.1, 0.01, 0.001}) {
    for (double s : {0.0, 0.05}) {
      const auto b = theorem1_bound(example(d, s));
      EXPECT_LE(b.prob_lower_bound, 1.0);
      EXPECT_TRUE(std::isfinite(b.error_bound));
      EXPECT_EQ(b.vacuous, b.error_bound > 1.0 || b.prob_lower_bound <= 0.0);
    }
  }
}

TEST(Theorem1, ParameterErrors) {
  auto p = example(0.01, 0.0);
  p.eta = 2.0;
  EXPECT_THROW(theorem1_bound(p), ParameterError);
  p = example(0.01, 0.0);
  p.m = 50;
  EXPECT_THROW(theorem1_bound(p), ParameterError);
  p = example(0.01, 0.0);
  p.m = 500;
  EXPECT_THROW(theorem1_bound(p), ParameterError);
  p = example(1.5, 0.0);
  EXPECT_THROW(theorem1_bound(p), ParameterError);
  p = example(0.01, -1.0);
  EXPECT_THROW(theorem1_bound(p), ParameterError);
  p = example(0.01, 0.0);
  p.upsilon = 0.6;
  EXPECT_THROW(theorem1_bound(p), ParameterError);
}

TEST(Theorem2, HandValues) {
  for (double delta : {0.5, 0.1, 1e-4}) {
    const auto c = theorem2_constants(100, 400, 100, 1.0, delta, 0.0);
    EXPECT_NEAR(c.eta, 4.25, 1e-12);
    EXPECT_NEAR(c.gamma2, 2.0 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(c.gamma1, 16.0 * 1.5, 1e-12);
    EXPECT_FALSE(c.contraction_ok);
  }
}

TEST(Theorem2, SmallDeltaLimit) {
  const auto c = theorem2_constants(10, 400, 100, 1.0, 1e-300, 0.5);
  EXPECT_LT(c.eta, 1e-100);
  EXPECT_NEAR(c.gamma1, 16.0, 1e-12);
  EXPECT_TRUE(c.contraction_ok);
}

TEST(Theorem2, MeasurementRequirementUsesBase2) {
  const auto c = theorem2_constants(8, 256, 3000, 1.0, 0.001, 0.5, 0.1);
  EXPECT_EQ(c.m_required, static_cast<std::size_t>(std::ceil(40.0 * 1.6 * 8 * std::log2(1000.0))));
}

TEST(Theorem2, EtaInvariantUnderLDeltaRescaling) {
  Rng r(3);
  for (int t = 0; t < 50; ++t) {
    const double L = 0.5 + 2.0 * r.uniform();
    const double alpha = 0.1 + r.uniform();
    const double delta = 0.01 + 0.5 * r.uniform();
    const double c = 1.1 + 2.0 * r.uniform();
    // δ' with δ'^α = δ^α / c.
    const double delta2 = delta * std::pow(c, -1.0 / alpha);
    const auto a = theorem2_constants(20, 300, 120, L, delta, alpha);
    const auto b = theorem2_constants(20, 300, 120, c * L, delta2, alpha);
    EXPECT_NEAR(a.eta, b.eta, 1e-12 * a.eta);
  }
}

TEST(Theorem2, Errors) {
  EXPECT_THROW(theorem2_constants(0, 10, 10, 1, 0.1, 0), ParameterError);
  EXPECT_THROW(theorem2_constants(1, 10, 10, 1, 1.0, 0), ParameterError);
  EXPECT_THROW(theorem2_constants(1, 10, 10, -1, 0.1, 0), ParameterError);
}

TEST(PredictNextError, ZeroPreviousNoiseless) {
  const auto c = theorem2_constants(10, 400, 200, 1.0, 0.01, 0.5);
  EXPECT_NEAR(predict_next_error(0.0, c, 0.0, 400, 10, 200, 1.0, 0.01, 0.5), c.gamma1 * 0.01, 1e-15);
}

TEST(PredictNextError, ContractionWhenDeltaVanishes) {
  const auto c = theorem2_constants(10, 400, 200, 1.0, 1e-300, 0.5);
  const double next = predict_next_error(0.3, c, 0.0, 400, 10, 200, 1.0, 1e-300, 0.5);
  EXPECT_NEAR(next, 0.9 * 0.3, 1e-12);
  EXPECT_LT(next, 0.3);
}

TEST(PredictNextError, NoiseTermHandComputed) {
  const std::size_t k = 8, n = 256, m = 64;
  const double L = 2.0, delta = 0.25, alpha = 0.5, sigma = 0.3;
  const auto c = theorem2_constants(k, n, m, L, delta, alpha);
  const double gain = std::sqrt(6.0 * 1.5 * 2.0 * 8.0 / 64.0) + c.gamma2 * L * 0.5;
  const double want = (0.9 + c.eta) * 0.1 + gain * sigma / 16.0 + c.gamma1 * delta;
  EXPECT_NEAR(predict_next_error(0.1, c, sigma, n, k, m, L, delta, alpha), want, 1e-12);
}

TEST(Wilson, MatchesReferenceValues) {
  // Reference values from an independent Wilson-interval implementation.
  EXPECT_NEAR(wilson_half_width(3, 1000, 3.0), 0.006806708753357748, 1e-12);
  EXPECT_NEAR(wilson_half_width(50, 100, 1.96), 0.09617017140985284, 1e-12);
  EXPECT_GT(wilson_half_width(0, 100000, 3.0), 0.0);
  EXPECT_THROW(wilson_half_width(0, 0), ParameterError);
}

TEST(Lemma1, UpperTailBoundValue) {
  Rng r(4);
  const auto c = verify_lemma1(100, 1.0, 2000, r);
  EXPECT_NEAR(c.bound, 2.1715792741452982e-07, 1e-20);
  EXPECT_EQ(c.empirical, 0.0);
  EXPECT_TRUE(c.pass);
}

TEST(Lemma1, ZeroTauIsTrivial) {
  Rng r(5);
  const auto c = verify_lemma1(10, 0.0, 1000, r);
  EXPECT_EQ(c.bound, 1.0);
  EXPECT_TRUE(c.pass);
}

TEST(Lemma1, LowerTail) {
  Rng r(6);
  const auto c = verify_lemma1(100, 0.5, 20000, r, Tail::lower);
  EXPECT_NEAR(c.bound, 6.395319770414604e-05, 1e-17);
  EXPECT_TRUE(c.pass);
  EXPECT_THROW(verify_lemma1(100, 1.0, 10, r, Tail::lower), ParameterError);
}

TEST(Lemma1, ModerateTauEmpiricalFrequency) {
  // m=10, τ=0.5: the tail is common enough for the empirical count to matter.
  Rng r(7);
  const auto c = verify_lemma1(10, 0.5, 20000, r);
  EXPECT_GT(c.empirical, 0.0);
  EXPECT_LE(c.empirical, c.bound);
  EXPECT_TRUE(c.pass);
}

TEST(Lemma2, BoundValues) {
  Rng r(8);
  const auto a = verify_lemma2(64, 100, 5000, r);
  EXPECT_DOUBLE_EQ(a.bound, 0.03125);
  EXPECT_TRUE(a.pass);
  const auto b = verify_lemma2(64, 400, 5000, r);
  EXPECT_DOUBLE_EQ(b.bound, std::ldexp(1.0, -20));
  EXPECT_EQ(b.empirical, 0.0);
  const auto c = verify_lemma2(64, 100, 5000, r, Lemma2Pairing::identical);
  EXPECT_TRUE(c.pass);
}

TEST(Lemma2, SamplersAgreeInDistribution) {
  Rng r1(9), r2(10);
  const auto a = lemma2_deviations(20, 30, 3000, r1, Lemma2Pairing::independent, Lemma2Sampler::explicit_matrix);
  const auto b = lemma2_deviations(20, 30, 3000, r2, Lemma2Pairing::independent, Lemma2Sampler::rotation);
  EXPECT_LT(ks_two_sample(a, b), 1.63 * std::sqrt(2.0 / 3000.0));
}

TEST(Lemma2, IdenticalPairingDeviationIsChiSquareTail) {
  Rng r(11);
  const auto d = lemma2_deviations(16, 50, 200, r, Lemma2Pairing::identical, Lemma2Sampler::rotation);
  for (double v : d) EXPECT_LE(v, 1.0);
}

TEST(Ks, HandCases) {
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 2, 3}, {4, 5, 6}), 1.0);
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5);
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 2, 3}, {3, 1, 2}), 0.0);
  EXPECT_THROW(ks_two_sample({}, {1}), ParameterError);
}

TEST(Lemma3, DegenerateDimension) {
  Rng r(12);
  EXPECT_TRUE(verify_lemma3(1, 10000, r).pass);
}

TEST(Lemma3, CriticalValueAndSymmetry) {
  Rng r(13);
  const auto c = verify_lemma3(50, 10000, r);
  EXPECT_NEAR(c.critical_value, 0.02305168106668145, 1e-15);
  EXPECT_LT(c.ks_statistic, 0.0231);
  EXPECT_LE(std::abs(c.mean), 3.0 * c.stderr_mean);
  EXPECT_THROW(verify_lemma3(5, 999, r), ParameterError);
}
