#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "gencs/errors.hpp"

namespace gencs {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Counter-based generator keyed by (seed, stream).
///
/// Each draw is a SplitMix64 finalisation of `key + counter * golden`, so the
/// sequence depends only on (seed, stream) and on how many draws preceded it.
/// All conversions to real numbers are done here rather than through
/// <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-ctr";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent generator on a sub-stream; does not advance this one.
  Rng derive(std::uint64_t substream) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller; the paired value is cached.
  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

bool all_finite(const Vector& v) noexcept;
bool all_finite(const Matrix& m) noexcept;

/// i.i.d. N(mean, variance) draws. variance == 0 consumes no draws.
Vector gaussian_vector(Rng& rng, std::size_t len, double mean, double variance);
/// rows x cols matrix of i.i.d. N(mean, variance), filled row-major.
Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double mean, double variance);

Vector matvec(const Matrix& a, const Vector& x);
/// Computes Aᵀy without forming the transpose.
Vector matvec_t(const Matrix& a, const Vector& y);

/// Largest singular value by power iteration on AᵀA.
///
/// Stops after `iters` iterations or when the estimate changes by less than
/// `tol` relative. The Rayleigh estimate is non-decreasing in the iteration
/// count.
double operator_norm(const Matrix& a, std::size_t iters, Rng& rng, double tol = 1e-9);

/// Orthonormal DCT-II synthesis basis: column j is the j-th cosine atom, so
/// x = D c and c = Dᵀ x.
Matrix dct_basis(std::size_t n);

/// Copies values into [0, 1].
Vector clip_unit(const Vector& v);

}  // namespace gencs
