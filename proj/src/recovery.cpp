#include "gencs/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gencs {

namespace {

void check_measurements(const SensingOperator& op, const Vector& y, const char* who) {
  if (static_cast<std::size_t>(y.size()) != op.m) {
    throw ShapeError(std::string(who) + ": y has length " + std::to_string(y.size()) + ", operator has m=" +
                     std::to_string(op.m));
  }
  if (static_cast<std::size_t>(op.A.rows()) != op.m || static_cast<std::size_t>(op.A.cols()) != op.n) {
    throw ShapeError(std::string(who) + ": operator matrix does not match its declared m x n");
  }
}

double normalized_distance(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::sqrt(static_cast<double>(a.size()));
}

}  // namespace

void PgdConfig::validate() const {
  if (!std::isfinite(step_size) || step_size < 0.0) throw ParameterError("PgdConfig: step_size must be finite, >= 0");
  if (max_iters == 0) throw ParameterError("PgdConfig: max_iters must be >= 1");
  if (!std::isfinite(rel_tol) || rel_tol < 0.0) throw ParameterError("PgdConfig: rel_tol must be finite, >= 0");
}

double PgdConfig::effective_step(std::size_t m, std::size_t n) const {
  if (step_scale == StepScale::absolute) return step_size;
  return step_size * static_cast<double>(n) / static_cast<double>(m);
}

RecoveryResult ae_pgd(const SensingOperator& op, const Vector& y, const Autoencoder& ae, const PgdConfig& cfg,
                      bool keep_trace) {
  cfg.validate();
  check_measurements(op, y, "ae_pgd");
  if (ae.n() != op.n) {
    throw ShapeError("ae_pgd: autoencoder has n=" + std::to_string(ae.n()) + ", operator has n=" + std::to_string(op.n));
  }
  const double mu = cfg.effective_step(op.m, op.n);
  auto project = [&](Vector s) { return ae.project(cfg.clip_to_unit_box ? clip_unit(s) : s); };

  RecoveryResult result;
  Vector x = project(mu * matvec_t(op.A, y));
  if (!x.allFinite()) throw DivergenceError(0, "ae_pgd: non-finite initial iterate");
  if (keep_trace) result.trace.push_back(x);
  result.final_residual = (matvec(op.A, x) - y).norm();

  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    const Vector residual = y - op.A * x;
    Vector next = project(x + mu * (op.A.transpose() * residual));
    if (!next.allFinite()) throw DivergenceError(t + 1, "ae_pgd: non-finite iterate");
    const double change = normalized_distance(next, x);
    result.final_residual = (op.A * next - y).norm();
    result.residual_history.push_back(result.final_residual);
    result.iterate_change_history.push_back(change);
    x = std::move(next);
    if (keep_trace) result.trace.push_back(x);
    ++result.iters_used;
    if (change < cfg.rel_tol) break;
  }
  result.x_hat = std::move(x);
  return result;
}

RecoveryResult latent_gd(const SensingOperator& op, const Vector& y, const Mlp& decoder, const Vector& u0, double lr,
                         std::size_t iters) {
  check_measurements(op, y, "latent_gd");
  if (decoder.output_dim() != op.n) throw ShapeError("latent_gd: decoder output dim does not match operator n");
  if (static_cast<std::size_t>(u0.size()) != decoder.input_dim()) throw ShapeError("latent_gd: u0 length mismatch");
  if (!u0.allFinite() || u0.minCoeff() < 0.0 || u0.maxCoeff() > 1.0) {
    throw ParameterError("latent_gd: u0 must lie in [0,1]^k");
  }
  if (!std::isfinite(lr) || lr < 0.0) throw ParameterError("latent_gd: lr must be finite and >= 0");

  RecoveryResult result;
  Vector u = u0;
  Vector x = decoder.forward(u);
  result.final_residual = (op.A * x - y).norm();
  for (std::size_t t = 0; t < iters; ++t) {
    const Vector grad_x = 2.0 * (op.A.transpose() * (op.A * x - y));
    const Vector grad_u = backward(decoder, u, grad_x).grad_in;
    u = clip_unit(u - lr * grad_u);
    Vector next = decoder.forward(u);
    if (!next.allFinite()) throw DivergenceError(t + 1, "latent_gd: non-finite iterate");
    result.iterate_change_history.push_back(normalized_distance(next, x));
    x = std::move(next);
    result.final_residual = (op.A * x - y).norm();
    result.residual_history.push_back(result.final_residual);
    ++result.iters_used;
  }
  result.x_hat = std::move(x);
  result.latent = std::move(u);
  return result;
}

RecoveryResult exhaustive_quantized(const SensingOperator& op, const Vector& y, const Mlp& decoder, unsigned b,
                                    std::size_t budget) {
  check_measurements(op, y, "exhaustive_quantized");
  if (decoder.output_dim() != op.n) throw ShapeError("exhaustive_quantized: decoder output dim does not match n");
  if (b > 30) throw InfeasibleScaleError("exhaustive_quantized: b > 30 is never feasible");
  const std::size_t k = decoder.input_dim();
  const std::size_t levels = (std::size_t{1} << b) + 1;
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) {
    if (total > budget / levels) {
      throw InfeasibleScaleError("exhaustive_quantized: (2^" + std::to_string(b) + "+1)^" + std::to_string(k) +
                                 " grid points exceed budget " + std::to_string(budget));
    }
    total *= levels;
  }

  const double spacing = std::ldexp(1.0, -static_cast<int>(b));
  std::vector<std::size_t> digits(k, 0);
  Vector u = Vector::Zero(static_cast<Eigen::Index>(k));
  Vector best_u = u;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t count = 0; count < total; ++count) {
    for (std::size_t i = 0; i < k; ++i) u[static_cast<Eigen::Index>(i)] = static_cast<double>(digits[i]) * spacing;
    const double residual = (op.A * decoder.forward(u) - y).norm();
    if (residual < best) {
      best = residual;
      best_u = u;
    }
    // Odometer with the last coordinate fastest: lexicographic order.
    for (std::size_t i = k; i-- > 0;) {
      if (++digits[i] < levels) break;
      digits[i] = 0;
    }
  }

  RecoveryResult result;
  result.x_hat = decoder.forward(best_u);
  result.latent = best_u;
  result.final_residual = best;
  result.iters_used = total;
  return result;
}

double soft_threshold(double v, double t) noexcept {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

RecoveryResult ista_lasso_dct(const SensingOperator& op, const Vector& y, double lambda, std::size_t iters) {
  return ista_lasso_dct(op, y, lambda, iters, dct_basis(op.n));
}

RecoveryResult ista_lasso_dct(const SensingOperator& op, const Vector& y, double lambda, std::size_t iters,
                              const Matrix& dct) {
  return ista_lasso_dct(make_lasso_plan(op, dct), y, lambda, iters);
}

LassoDctPlan make_lasso_plan(const SensingOperator& op, const Matrix& dct) {
  if (static_cast<std::size_t>(dct.rows()) != op.n || dct.rows() != dct.cols()) {
    throw ShapeError("ista_lasso_dct: DCT basis must be n x n");
  }
  LassoDctPlan plan{op.m, op.n, dct, op.A * dct, 0.0};
  Rng rng(0x15A, 0);
  const double lip = std::pow(operator_norm(plan.b, 2000, rng, 1e-13), 2);
  plan.step = lip > 0.0 ? 1.0 / lip : 0.0;
  return plan;
}

RecoveryResult ista_lasso_dct(const LassoDctPlan& plan, const Vector& y, double lambda, std::size_t iters) {
  if (static_cast<std::size_t>(y.size()) != plan.m) {
    throw ShapeError("ista_lasso_dct: y has length " + std::to_string(y.size()) + ", operator has m=" +
                     std::to_string(plan.m));
  }
  if (!y.allFinite()) throw ParameterError("ista_lasso_dct: y contains non-finite values");
  if (!std::isfinite(lambda) || lambda < 0.0) throw ParameterError("ista_lasso_dct: lambda must be finite and >= 0");
  const Matrix& b = plan.b;
  const double step = plan.step;
  const double root_n = std::sqrt(static_cast<double>(plan.n));

  auto objective = [&](const Vector& c, const Vector& fit) { return 0.5 * fit.squaredNorm() + lambda * c.lpNorm<1>(); };

  RecoveryResult result;
  Vector c = Vector::Zero(static_cast<Eigen::Index>(plan.n));
  Vector fit = -y;  // B c - y
  result.objective_history.push_back(objective(c, fit));
  for (std::size_t t = 0; t < iters; ++t) {
    const Vector grad = b.transpose() * fit;
    Vector next = c - step * grad;
    for (Eigen::Index i = 0; i < next.size(); ++i) next[i] = soft_threshold(next[i], step * lambda);
    if (!next.allFinite()) throw DivergenceError(t + 1, "ista_lasso_dct: non-finite iterate");
    // D is orthonormal, so the change in x = Dc equals the change in c.
    result.iterate_change_history.push_back((next - c).norm() / root_n);
    c = std::move(next);
    fit = b * c - y;
    result.residual_history.push_back(fit.norm());
    result.objective_history.push_back(objective(c, fit));
    ++result.iters_used;
  }
  result.final_residual = fit.norm();
  result.x_hat = plan.dct * c;
  result.latent = std::move(c);
  return result;
}

std::vector<BlockPosition> block_layout(const BlockSpec& spec) {
  auto axis = [](std::size_t block, std::size_t stride, std::size_t extent, const char* name) {
    if (block == 0 || extent == 0) throw SpecError(std::string("block_layout: zero ") + name + " size");
    if (block > extent) throw SpecError(std::string("block_layout: block exceeds image ") + name);
    if (stride == 0) throw SpecError(std::string("block_layout: zero ") + name + " stride");
    if (stride > block) throw SpecError(std::string("block_layout: ") + name + " stride leaves a coverage gap");
    std::vector<std::size_t> origins;
    for (std::size_t o = 0;; o += stride) {
      if (o + block > extent) {
        throw SpecError(std::string("block_layout: last ") + name + " block does not reach the image edge");
      }
      origins.push_back(o);
      if (o + block == extent) break;
    }
    return origins;
  };
  const auto rows = axis(spec.block_size.first, spec.stride.first, spec.image_dims.first, "row");
  const auto cols = axis(spec.block_size.second, spec.stride.second, spec.image_dims.second, "column");
  std::vector<BlockPosition> out;
  for (std::size_t r : rows) {
    for (std::size_t c : cols) out.push_back({r, c});
  }
  return out;
}

Vector extract_block(const Vector& image, const BlockSpec& spec, const BlockPosition& pos) {
  const auto [h, w] = spec.block_size;
  const std::size_t width = spec.image_dims.second;
  if (static_cast<std::size_t>(image.size()) != spec.image_dims.first * width) {
    throw ShapeError("extract_block: image length does not match image_dims");
  }
  Vector out(static_cast<Eigen::Index>(h * w));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      out[static_cast<Eigen::Index>(r * w + c)] = image[static_cast<Eigen::Index>((pos.row + r) * width + pos.col + c)];
    }
  }
  return out;
}

std::vector<Vector> measure_blocks(const Vector& image, const BlockSpec& spec, const std::vector<SensingOperator>& ops,
                                   const std::vector<double>& sigmas, Rng& rng) {
  const auto layout = block_layout(spec);
  if (ops.size() != layout.size() || sigmas.size() != layout.size()) {
    throw SpecError("measure_blocks: need one operator and one sigma per block");
  }
  std::vector<Vector> ys;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    ys.push_back(measure(ops[i], extract_block(image, spec, layout[i]), NoiseModel{sigmas[i]}, rng));
  }
  return ys;
}

RecoveryResult blockwise_recover(const Vector& image, const BlockSpec& spec,
                                 const std::vector<SensingOperator>& per_block_ops,
                                 const std::vector<Autoencoder>& per_block_aes, const PgdConfig& cfg,
                                 const std::vector<Vector>& y_blocks) {
  const auto layout = block_layout(spec);
  if (per_block_ops.size() != layout.size() || per_block_aes.size() != layout.size() ||
      y_blocks.size() != layout.size()) {
    throw SpecError("blockwise_recover: layout has " + std::to_string(layout.size()) +
                    " blocks but operators/models/measurements do not match");
  }
  const auto [height, width] = spec.image_dims;
  const auto [bh, bw] = spec.block_size;
  const bool have_truth = static_cast<std::size_t>(image.size()) == height * width;

  std::vector<RecoveryResult> parts;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    parts.push_back(ae_pgd(per_block_ops[i], y_blocks[i], per_block_aes[i], cfg));
  }

  RecoveryResult result;
  if (parts.size() == 1) {
    result = std::move(parts.front());
  } else {
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(height * width));
    Vector count = Vector::Zero(sum.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      for (std::size_t r = 0; r < bh; ++r) {
        for (std::size_t c = 0; c < bw; ++c) {
          const auto pix = static_cast<Eigen::Index>((layout[i].row + r) * width + layout[i].col + c);
          sum[pix] += parts[i].x_hat[static_cast<Eigen::Index>(r * bw + c)];
          count[pix] += 1.0;
        }
      }
    }
    result.x_hat = sum.cwiseQuotient(count);

    // Aggregate histories: blocks that already stopped keep their last
    // residual and contribute zero change.
    std::size_t longest = 0;
    for (const auto& p : parts) longest = std::max(longest, p.iters_used);
    const double total_pixels = static_cast<double>(height * width);
    for (std::size_t t = 0; t < longest; ++t) {
      double res2 = 0.0, change2 = 0.0;
      for (const auto& p : parts) {
        if (p.residual_history.empty()) {
          res2 += p.final_residual * p.final_residual;
          continue;
        }
        const double r = p.residual_history[std::min(t, p.residual_history.size() - 1)];
        res2 += r * r;
        if (t < p.iterate_change_history.size()) {
          change2 += static_cast<double>(bh * bw) * std::pow(p.iterate_change_history[t], 2);
        }
      }
      result.residual_history.push_back(std::sqrt(res2));
      result.iterate_change_history.push_back(std::sqrt(change2 / total_pixels));
    }
    result.iters_used = longest;
    result.final_residual = result.residual_history.empty() ? 0.0 : result.residual_history.back();
  }
  if (have_truth) result.psnr_vs_truth = psnr(image, result.x_hat, 1.0);
  return result;
}

double psnr(const Vector& x, const Vector& x_hat, double peak) {
  if (x.size() != x_hat.size()) throw ShapeError("psnr: length mismatch");
  if (x.size() == 0) throw ShapeError("psnr: empty signals");
  if (!(peak > 0.0) || !std::isfinite(peak)) throw ParameterError("psnr: peak must be positive and finite");
  const double mse = (x - x_hat).squaredNorm() / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace gencs
