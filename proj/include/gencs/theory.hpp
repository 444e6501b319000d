#pragma once

#include <array>
#include <string>
#include <vector>

#include "gencs/numerics.hpp"

namespace gencs {

/// [x]_b = 2^-b · floor(2^b · x).
double quantize(double x, unsigned b);
Vector quantize_vec(const Vector& u, unsigned b);

// ---------------------------------------------------------------------------
// Exhaustive-search error bound (noisy case, natural logs throughout).

struct Theorem1Params {
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  double L = 1.0;
  double delta = 0.1;
  double sigma = 0.0;
  double eta = 4.0;
  double upsilon = 0.25;
  /// Width a = a2 - a1 of the latent range; 1 for U = [0,1].
  double latent_range = 1.0;

  /// Throws ParameterError naming the first violated condition.
  void validate() const;
};

struct Theorem1Bound {
  double error_bound = 0.0;
  /// √(6Lσ)(2k/m)^{1/4} δ^{1/2-υ/2-1/η}
  double noise_cross_term = 0.0;
  /// 4σ δ^{-2/η} √(k ln(1/δ)/m)
  double noise_term = 0.0;
  double alpha_term = 0.0;
  /// 2δ^{1-1/η}, δ^{1/2-1/η}√(2σ), 3Lδ^{1-υ-1/η}√(k/m), Lδ^{1-υ}√(k/n)
  std::array<double, 4> alpha_parts{};
  double zeta = 0.0;
  double prob_lower_bound = 0.0;
  /// error_bound > 1 or prob_lower_bound <= 0.
  bool vacuous = false;
};

Theorem1Bound theorem1_bound(const Theorem1Params& p);

// ---------------------------------------------------------------------------
// Projected-gradient convergence constants (base-2 logs, as stated for the
// measurement requirement).

struct Theorem2Constants {
  double eta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::size_t m_required = 0;
  bool contraction_ok = false;  // 0.9 + eta < 1
};

Theorem2Constants theorem2_constants(std::size_t k, std::size_t n, std::size_t m, double L, double delta,
                                     double alpha, double upsilon = 0.1);

/// Right-hand side of the one-step inequality in the (1/√n)-normalised
/// error scale:
/// (0.9+η)·prev + (√(6(1+α)log2(1/δ)k/m) + γ2 L δ^α)·σ/√n + γ1 δ.
double predict_next_error(double prev, const Theorem2Constants& c, double sigma, std::size_t n, std::size_t k,
                          std::size_t m, double L, double delta, double alpha);

// ---------------------------------------------------------------------------
// Monte-Carlo checks of the concentration lemmas.

/// Upper half-width of the Wilson score interval for `successes` out of
/// `trials` at z standard deviations.
double wilson_half_width(std::size_t successes, std::size_t trials, double z = 3.0);

struct LemmaCheck {
  std::string lemma;
  double empirical = 0.0;
  double bound = 0.0;
  double half_width = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

enum class Tail { upper, lower };

/// Frequency of Σ U_i² > m(1+τ) (upper) or < m(1-τ) (lower) for m i.i.d.
/// N(0,1) draws, against e^{-(m/2)(τ - ln(1+τ))} or e^{(m/2)(τ + ln(1-τ))}.
LemmaCheck verify_lemma1(std::size_t m, double tau, std::size_t trials, Rng& rng, Tail tail = Tail::upper);

enum class Lemma2Pairing {
  /// Independent uniform unit vectors u, v.
  independent,
  /// u = v, reducing the event to a lower chi-square tail.
  identical,
};

enum class Lemma2Sampler {
  /// Draw the full m x n standard normal matrix each trial.
  explicit_matrix,
  /// Draw (Au, Av) directly: Au = g1, Av = ρ g1 + √(1-ρ²) g2 with ρ = ⟨u,v⟩.
  rotation,
};

/// Frequency of ⟨u,v⟩ - (1/m)⟨Au,Av⟩ >= 0.45 for A with i.i.d. N(0,1)
/// entries, against 2^{-0.05 m}.
LemmaCheck verify_lemma2(std::size_t n, std::size_t m, std::size_t trials, Rng& rng,
                         Lemma2Pairing pairing = Lemma2Pairing::independent,
                         Lemma2Sampler sampler = Lemma2Sampler::rotation);

/// Raw deviation samples ⟨u,v⟩ - (1/m)⟨Au,Av⟩ (used to cross-check samplers).
std::vector<double> lemma2_deviations(std::size_t n, std::size_t m, std::size_t trials, Rng& rng,
                                      Lemma2Pairing pairing, Lemma2Sampler sampler);

struct Lemma3Check {
  double ks_statistic = 0.0;
  double critical_value = 0.0;
  /// Mean and standard error of the ⟨u,v⟩ samples.
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

/// Two-sample Kolmogorov-Smirnov comparison of ⟨u,v⟩ (u,v i.i.d. N(0,I_n))
/// against ‖u'‖·G, each with `trials` samples. Critical value 1.63·√(2/trials).
Lemma3Check verify_lemma3(std::size_t n, std::size_t trials, Rng& rng);

/// sup |F_a - F_b| between the empirical CDFs of two samples.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace gencs
