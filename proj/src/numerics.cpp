#include "gencs/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gencs {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

const char* to_string(FormatErrorKind kind) noexcept {
  switch (kind) {
    case FormatErrorKind::bad_magic: return "bad magic";
    case FormatErrorKind::bad_version: return "unsupported version";
    case FormatErrorKind::malformed_header: return "malformed header";
    case FormatErrorKind::dimension_mismatch: return "dimension mismatch";
    case FormatErrorKind::truncated: return "truncated payload";
    case FormatErrorKind::dim_overflow: return "dimension overflow";
    case FormatErrorKind::bad_value: return "bad value";
    case FormatErrorKind::io: return "i/o error";
  }
  return "format error";
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_(stream), key_(mix64(seed + kGolden) ^ mix64(~stream * kGolden + 0x5851F42D4C957F2DULL)) {}

Rng Rng::derive(std::uint64_t substream) const noexcept {
  return Rng(seed_, mix64(stream_ * kGolden + substream + 1));
}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) noexcept {
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 == 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

bool all_finite(const Vector& v) noexcept { return v.allFinite(); }
bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

Vector gaussian_vector(Rng& rng, std::size_t len, double mean, double variance) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0) {
    throw ParameterError("gaussian_vector: mean and variance must be finite with variance >= 0");
  }
  Vector out = Vector::Constant(static_cast<Eigen::Index>(len), mean);
  if (variance == 0.0) return out;
  const double sd = std::sqrt(variance);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sd * rng.normal();
  return out;
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double mean, double variance) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0) {
    throw ParameterError("gaussian_matrix: mean and variance must be finite with variance >= 0");
  }
  Matrix out = Matrix::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), mean);
  if (variance == 0.0) return out;
  const double sd = std::sqrt(variance);
  double* data = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) data[i] += sd * rng.normal();
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) {
    throw ShapeError("matvec: matrix " + shape_str(a.rows(), a.cols()) + " vs vector of length " +
                     std::to_string(x.size()));
  }
  return a * x;
}

Vector matvec_t(const Matrix& a, const Vector& y) {
  if (a.rows() != y.size()) {
    throw ShapeError("matvec_t: matrix " + shape_str(a.rows(), a.cols()) + " vs vector of length " +
                     std::to_string(y.size()));
  }
  return a.transpose() * y;
}

double operator_norm(const Matrix& a, std::size_t iters, Rng& rng, double tol) {
  if (a.rows() == 0 || a.cols() == 0) throw ShapeError("operator_norm: empty matrix");
  if (iters == 0) throw ParameterError("operator_norm: iters must be >= 1");

  Vector v = gaussian_vector(rng, static_cast<std::size_t>(a.cols()), 0.0, 1.0);
  v.normalize();
  double estimate = 0.0;
  for (std::size_t t = 0; t < iters; ++t) {
    const Vector av = a * v;
    const double next = av.norm();
    Vector w = a.transpose() * av;
    const double wn = w.norm();
    const bool converged = t > 0 && std::abs(next - estimate) <= tol * next;
    estimate = next;
    if (wn == 0.0 || converged) break;
    v = w / wn;
  }
  return estimate;
}

Matrix dct_basis(std::size_t n) {
  if (n == 0) throw ParameterError("dct_basis: n must be >= 1");
  const auto size = static_cast<Eigen::Index>(n);
  Matrix d(size, size);
  const double dc = std::sqrt(1.0 / static_cast<double>(n));
  const double ac = std::sqrt(2.0 / static_cast<double>(n));
  for (Eigen::Index j = 0; j < size; ++j) {
    for (Eigen::Index k = 0; k < size; ++k) {
      const double c = (k == 0) ? dc : ac;
      d(j, k) = c * std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) * static_cast<double>(k) /
                             (2.0 * static_cast<double>(n)));
    }
  }
  return d;
}

Vector clip_unit(const Vector& v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace gencs
