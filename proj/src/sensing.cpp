#include "gencs/sensing.hpp"

#include <cmath>
#include <string>

namespace gencs {

SensingOperator SensingOperator::from_matrix(Matrix a) {
  if (a.rows() == 0 || a.cols() == 0) throw ParameterError("SensingOperator: empty matrix");
  if (!a.allFinite()) throw ParameterError("SensingOperator: non-finite entry");
  SensingOperator op;
  op.m = static_cast<std::size_t>(a.rows());
  op.n = static_cast<std::size_t>(a.cols());
  op.A = std::move(a);
  return op;
}

SensingOperator make_operator(std::size_t m, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  if (m == 0 || n == 0) throw ParameterError("make_operator: m and n must be >= 1");
  Rng rng(seed, stream);
  SensingOperator op;
  op.A = gaussian_matrix(rng, m, n, 0.0, 1.0 / static_cast<double>(n));
  op.m = m;
  op.n = n;
  op.seed = seed;
  op.stream = stream;
  return op;
}

Vector measure(const SensingOperator& op, const Vector& x, const NoiseModel& noise, Rng& rng) {
  if (!std::isfinite(noise.sigma) || noise.sigma < 0.0) throw ParameterError("measure: sigma must be finite and >= 0");
  Vector y = matvec(op.A, x);
  if (noise.sigma > 0.0) y += gaussian_vector(rng, op.m, 0.0, noise.sigma * noise.sigma);
  return y;
}

double snr_to_sigma(double snr_db, const SensingOperator& op, const Vector& x) {
  if (!std::isfinite(snr_db)) {
    if (snr_db > 0) return 0.0;
    throw ParameterError("snr_to_sigma: snr_db must be finite");
  }
  const double power = matvec(op.A, x).squaredNorm();
  if (power == 0.0) throw DegenerateSignalError("snr_to_sigma: ‖Ax‖ = 0, SNR undefined");
  return std::sqrt(power / (static_cast<double>(op.m) * std::pow(10.0, snr_db / 10.0)));
}

}  // namespace gencs
