#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gencs/model.hpp"
#include "gencs/numerics.hpp"
#include "gencs/sensing.hpp"

namespace gencs {

/// How PgdConfig::step_size is applied to Aᵀ(y - Ax).
enum class StepScale {
  /// s = x + μ Aᵀ(y - Ax) on the operator as stored (entries N(0, 1/n)).
  absolute,
  /// μ refers to the same operator rescaled to entries N(0, 1/m), i.e. unit
  /// expected column norm; the effective step on the stored operator is μ·n/m.
  /// μ = 1 here equals μ = 1/m on an operator with standard normal entries.
  unit_columns,
};

struct PgdConfig {
  double step_size = 0.7;
  StepScale step_scale = StepScale::unit_columns;
  std::size_t max_iters = 100;
  /// Stop once (1/√n)‖x̂ᵗ⁺¹ - x̂ᵗ‖ falls below this.
  double rel_tol = 1e-4;
  bool clip_to_unit_box = true;

  void validate() const;
  /// Step actually multiplying Aᵀ(y - Ax) for an m x n operator.
  double effective_step(std::size_t m, std::size_t n) const;
};

struct RecoveryResult {
  Vector x_hat;
  std::size_t iters_used = 0;
  /// ‖A x̂ᵗ - y‖ after each iteration.
  std::vector<double> residual_history;
  /// (1/√n)‖x̂ᵗ⁺¹ - x̂ᵗ‖ for each iteration.
  std::vector<double> iterate_change_history;
  /// Iterates x̂⁰, x̂¹, ... when requested (ae_pgd only).
  std::vector<Vector> trace;
  /// ISTA objective ½‖ADc - y‖² + λ‖c‖₁ at c⁰ and after each iteration.
  std::vector<double> objective_history;
  /// Latent code behind x_hat, for latent-space methods.
  std::optional<Vector> latent;
  double final_residual = 0.0;
  std::optional<double> psnr_vs_truth;
};

/// Projected gradient descent whose projection is decode(encode(·)):
///   sᵗ⁺¹ = x̂ᵗ + μAᵀ(y - Ax̂ᵗ),  x̂ᵗ⁺¹ = decode(encode(clip(sᵗ⁺¹))),
/// started from x̂⁰ = decode(encode(clip(μAᵀy))).
RecoveryResult ae_pgd(const SensingOperator& op, const Vector& y, const Autoencoder& ae, const PgdConfig& cfg,
                      bool keep_trace = false);

/// Projected gradient descent on ‖A g(u) - y‖² over u ∈ [0,1]^k.
RecoveryResult latent_gd(const SensingOperator& op, const Vector& y, const Mlp& decoder, const Vector& u0, double lr,
                         std::size_t iters);

/// Exact minimiser of ‖A g(u) - y‖ over the grid {i·2^-b : i = 0..2^b}^k.
/// Ties go to the lexicographically smallest u (first coordinate most
/// significant). Throws InfeasibleScaleError if (2^b+1)^k > budget.
/// iters_used is the number of grid points evaluated.
RecoveryResult exhaustive_quantized(const SensingOperator& op, const Vector& y, const Mlp& decoder, unsigned b,
                                    std::size_t budget);

/// ISTA for min_c ½‖A D c - y‖² + λ‖c‖₁ with the orthonormal DCT basis D,
/// step 1/‖AD‖². Returns x̂ = D c.
RecoveryResult ista_lasso_dct(const SensingOperator& op, const Vector& y, double lambda, std::size_t iters);

/// Same, with a precomputed DCT basis (avoids rebuilding it per call).
RecoveryResult ista_lasso_dct(const SensingOperator& op, const Vector& y, double lambda, std::size_t iters,
                              const Matrix& dct);

/// A D and the ISTA step for one operator, shared across many solves.
struct LassoDctPlan {
  std::size_t m = 0;
  std::size_t n = 0;
  Matrix dct;
  Matrix b;
  double step = 0.0;
};

LassoDctPlan make_lasso_plan(const SensingOperator& op, const Matrix& dct);
RecoveryResult ista_lasso_dct(const LassoDctPlan& plan, const Vector& y, double lambda, std::size_t iters);

double soft_threshold(double v, double t) noexcept;

struct BlockSpec {
  std::pair<std::size_t, std::size_t> block_size;  // (rows, cols)
  std::pair<std::size_t, std::size_t> stride;
  std::pair<std::size_t, std::size_t> image_dims;
};

struct BlockPosition {
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Row-major block origins. Throws SpecError when any pixel is left
/// uncovered or a block runs off the image.
std::vector<BlockPosition> block_layout(const BlockSpec& spec);
/// Row-major flattening of one block of a row-major image.
Vector extract_block(const Vector& image, const BlockSpec& spec, const BlockPosition& pos);
/// Independent measurement of each block.
std::vector<Vector> measure_blocks(const Vector& image, const BlockSpec& spec,
                                   const std::vector<SensingOperator>& ops, const std::vector<double>& sigmas,
                                   Rng& rng);

/// AE-PGD per block; pixels covered by several blocks get the mean of the
/// block reconstructions. `image` is the ground truth used for PSNR when its
/// length matches the layout (pass an empty vector otherwise).
RecoveryResult blockwise_recover(const Vector& image, const BlockSpec& spec,
                                 const std::vector<SensingOperator>& per_block_ops,
                                 const std::vector<Autoencoder>& per_block_aes, const PgdConfig& cfg,
                                 const std::vector<Vector>& y_blocks);

/// 10·log10(peak²/MSE); +infinity when the signals are identical.
double psnr(const Vector& x, const Vector& x_hat, double peak = 1.0);

}  // namespace gencs
