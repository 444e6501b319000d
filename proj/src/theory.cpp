#include "gencs/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gencs {

double quantize(double x, unsigned b) {
  if (b > 60) throw ParameterError("quantize: b must be <= 60");
  const int e = static_cast<int>(b);
  return std::ldexp(std::floor(std::ldexp(x, e)), -e);
}

Vector quantize_vec(const Vector& u, unsigned b) {
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = quantize(u[i], b);
  return out;
}

void Theorem1Params::validate() const {
  auto fail = [](const std::string& what) { throw ParameterError("theorem1: " + what); };
  if (k == 0 || n == 0 || m == 0) fail("k, n, m must be >= 1");
  if (!(L > 0.0) || !std::isfinite(L)) fail("L must be positive");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0,1)");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be >= 0");
  if (!(eta > 2.0) || !std::isfinite(eta)) fail("eta must exceed 2");
  if (!(upsilon > 0.0 && upsilon < 1.0)) fail("upsilon must lie in (0,1)");
  if (!(0.5 - upsilon / 2.0 - 1.0 / eta > 0.0)) fail("1/2 - upsilon/2 - 1/eta must be positive");
  if (static_cast<double>(m) < eta * static_cast<double>(k)) fail("m >= eta*k violated");
  if (m > n) fail("m <= n violated");
  if (!(latent_range > 0.0) || !std::isfinite(latent_range)) fail("latent range a must be positive");
}

Theorem1Bound theorem1_bound(const Theorem1Params& p) {
  p.validate();
  const double k = static_cast<double>(p.k), n = static_cast<double>(p.n), m = static_cast<double>(p.m);
  const double d = p.delta, L = p.L, s = p.sigma, eta = p.eta, ups = p.upsilon;
  const double log_inv_d = std::log(1.0 / d);

  Theorem1Bound out;
  out.noise_cross_term = std::sqrt(6.0 * L * s) * std::pow(2.0 * k / m, 0.25) * std::pow(d, 0.5 - ups / 2.0 - 1.0 / eta);
  out.noise_term = 4.0 * s * std::pow(d, -2.0 / eta) * std::sqrt(k * log_inv_d / m);
  out.alpha_parts = {
      2.0 * std::pow(d, 1.0 - 1.0 / eta),
      std::pow(d, 0.5 - 1.0 / eta) * std::sqrt(2.0 * s),
      3.0 * L * std::pow(d, 1.0 - ups - 1.0 / eta) * std::sqrt(k / m),
      L * std::pow(d, 1.0 - ups) * std::sqrt(k / n),
  };
  out.alpha_term = out.alpha_parts[0] + out.alpha_parts[1] + out.alpha_parts[2] + out.alpha_parts[3];
  out.error_bound = out.noise_cross_term + out.noise_term + out.alpha_term;

  out.zeta = (std::log(p.latent_range) + eta / 2.0 * (1.0 - std::pow(d, 2.0 / eta))) / log_inv_d;
  out.prob_lower_bound = 1.0 - std::exp(-(ups - out.zeta) * k * log_inv_d) - std::exp(-k * log_inv_d) -
                         3.0 * std::exp(-0.8 * m);
  out.vacuous = out.error_bound > 1.0 || out.prob_lower_bound <= 0.0;
  return out;
}

Theorem2Constants theorem2_constants(std::size_t k, std::size_t n, std::size_t m, double L, double delta,
                                     double alpha, double upsilon) {
  if (k == 0 || n == 0 || m == 0) throw ParameterError("theorem2: k, n, m must be >= 1");
  if (!(L > 0.0) || !std::isfinite(L)) throw ParameterError("theorem2: L must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("theorem2: delta must lie in (0,1)");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("theorem2: alpha must be >= 0");
  if (!(upsilon >= 0.0) || !std::isfinite(upsilon)) throw ParameterError("theorem2: upsilon must be >= 0");

  const double kd = static_cast<double>(k), nd = static_cast<double>(n), md = static_cast<double>(m);
  const double ratio = std::sqrt(nd / md);
  const double d_alpha = std::pow(delta, alpha);

  Theorem2Constants c;
  c.eta = (kd / nd) * (1.0 + std::pow(ratio + 2.0, 2)) * L * L * d_alpha * d_alpha;
  c.gamma1 = std::pow(2.0 + ratio, 2) * (L * d_alpha * std::sqrt(kd / nd) + 1.0);
  c.gamma2 = std::sqrt(2.0 * kd / nd) * (2.0 + ratio);
  c.m_required = static_cast<std::size_t>(std::ceil(40.0 * (1.0 + alpha + upsilon) * kd * std::log2(1.0 / delta)));
  c.contraction_ok = 0.9 + c.eta < 1.0;
  return c;
}

double predict_next_error(double prev, const Theorem2Constants& c, double sigma, std::size_t n, std::size_t k,
                          std::size_t m, double L, double delta, double alpha) {
  const double noise_gain = std::sqrt(6.0 * (1.0 + alpha) * std::log2(1.0 / delta) * static_cast<double>(k) /
                                      static_cast<double>(m)) +
                            c.gamma2 * L * std::pow(delta, alpha);
  return (0.9 + c.eta) * prev + noise_gain * sigma / std::sqrt(static_cast<double>(n)) + c.gamma1 * delta;
}

double wilson_half_width(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw ParameterError("wilson_half_width: trials must be >= 1");
  const double nn = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  return z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

LemmaCheck verify_lemma1(std::size_t m, double tau, std::size_t trials, Rng& rng, Tail tail) {
  if (m == 0 || trials == 0) throw ParameterError("verify_lemma1: m and trials must be >= 1");
  if (!std::isfinite(tau) || tau < 0.0) throw ParameterError("verify_lemma1: tau must be >= 0");
  if (tail == Tail::lower && !(tau > 0.0 && tau < 1.0)) {
    throw ParameterError("verify_lemma1: lower tail needs tau in (0,1)");
  }
  const double md = static_cast<double>(m);
  const double threshold = tail == Tail::upper ? md * (1.0 + tau) : md * (1.0 - tau);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double g = rng.normal();
      sum += g * g;
    }
    if (tail == Tail::upper ? sum > threshold : sum < threshold) ++hits;
  }
  LemmaCheck out;
  out.lemma = tail == Tail::upper ? "lemma1-upper" : "lemma1-lower";
  out.trials = trials;
  out.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  out.bound = tail == Tail::upper ? std::exp(-md / 2.0 * (tau - std::log1p(tau)))
                                  : std::exp(md / 2.0 * (tau + std::log1p(-tau)));
  out.half_width = wilson_half_width(hits, trials);
  out.pass = out.empirical <= out.bound + out.half_width;
  return out;
}

namespace {

Vector unit_vector(Rng& rng, std::size_t n) {
  Vector v = gaussian_vector(rng, n, 0.0, 1.0);
  double norm = v.norm();
  while (norm == 0.0) {
    v = gaussian_vector(rng, n, 0.0, 1.0);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace

std::vector<double> lemma2_deviations(std::size_t n, std::size_t m, std::size_t trials, Rng& rng,
                                      Lemma2Pairing pairing, Lemma2Sampler sampler) {
  if (n == 0 || m == 0 || trials == 0) throw ParameterError("verify_lemma2: n, m, trials must be >= 1");
  const double md = static_cast<double>(m);
  std::vector<double> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const Vector u = unit_vector(rng, n);
    const Vector v = pairing == Lemma2Pairing::identical ? u : unit_vector(rng, n);
    const double rho = std::clamp(u.dot(v), -1.0, 1.0);
    double inner = 0.0;
    if (sampler == Lemma2Sampler::explicit_matrix) {
      const Matrix a = gaussian_matrix(rng, m, n, 0.0, 1.0);
      inner = (a * u).dot(a * v);
    } else if (pairing == Lemma2Pairing::identical) {
      const Vector g1 = gaussian_vector(rng, m, 0.0, 1.0);
      inner = g1.squaredNorm();
    } else {
      const Vector g1 = gaussian_vector(rng, m, 0.0, 1.0);
      const Vector g2 = gaussian_vector(rng, m, 0.0, 1.0);
      inner = rho * g1.squaredNorm() + std::sqrt(1.0 - rho * rho) * g1.dot(g2);
    }
    out.push_back(rho - inner / md);
  }
  return out;
}

LemmaCheck verify_lemma2(std::size_t n, std::size_t m, std::size_t trials, Rng& rng, Lemma2Pairing pairing,
                         Lemma2Sampler sampler) {
  const auto dev = lemma2_deviations(n, m, trials, rng, pairing, sampler);
  const auto hits = static_cast<std::size_t>(std::count_if(dev.begin(), dev.end(), [](double d) { return d >= 0.45; }));
  LemmaCheck out;
  out.lemma = pairing == Lemma2Pairing::identical ? "lemma2-identical" : "lemma2";
  out.trials = trials;
  out.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  out.bound = std::exp2(-0.05 * static_cast<double>(m));
  out.half_width = wilson_half_width(hits, trials);
  out.pass = out.empirical <= out.bound + out.half_width;
  return out;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

Lemma3Check verify_lemma3(std::size_t n, std::size_t trials, Rng& rng) {
  if (n == 0) throw ParameterError("verify_lemma3: n must be >= 1");
  if (trials < 1000) throw ParameterError("verify_lemma3: trials must be >= 1000");
  std::vector<double> inner, scaled;
  inner.reserve(trials);
  scaled.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const Vector u = gaussian_vector(rng, n, 0.0, 1.0);
    const Vector v = gaussian_vector(rng, n, 0.0, 1.0);
    inner.push_back(u.dot(v));
  }
  for (std::size_t t = 0; t < trials; ++t) {
    const Vector u = gaussian_vector(rng, n, 0.0, 1.0);
    scaled.push_back(u.norm() * rng.normal());
  }
  Lemma3Check out;
  out.trials = trials;
  double sum = 0.0, sum2 = 0.0;
  for (double x : inner) {
    sum += x;
    sum2 += x * x;
  }
  const double tn = static_cast<double>(trials);
  out.mean = sum / tn;
  out.stderr_mean = std::sqrt(std::max(0.0, sum2 / tn - out.mean * out.mean) / tn);
  out.ks_statistic = ks_two_sample(std::move(inner), std::move(scaled));
  out.critical_value = 1.63 * std::sqrt(2.0 / tn);
  out.pass = out.ks_statistic < out.critical_value;
  return out;
}

}  // namespace gencs
