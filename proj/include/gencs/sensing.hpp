#pragma once

#include <cstdint>

#include "gencs/numerics.hpp"

namespace gencs {

/// Dense m x n Gaussian measurement matrix with entries i.i.d. N(0, 1/n).
struct SensingOperator {
  Matrix A;
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Wraps an explicit matrix (seed/stream recorded as 0).
  static SensingOperator from_matrix(Matrix a);

  double sampling_rate() const noexcept { return static_cast<double>(m) / static_cast<double>(n); }
  /// m > n is accepted but outside the compressed-sensing regime.
  bool overdetermined() const noexcept { return m > n; }
};

struct NoiseModel {
  double sigma = 0.0;
};

SensingOperator make_operator(std::size_t m, std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);

/// y = A x + z with z i.i.d. N(0, σ²). σ = 0 draws nothing from `rng`.
Vector measure(const SensingOperator& op, const Vector& x, const NoiseModel& noise, Rng& rng);

/// Noise std giving ‖Ax‖²/m over σ² equal to 10^(snr_db/10).
double snr_to_sigma(double snr_db, const SensingOperator& op, const Vector& x);

}  // namespace gencs
