#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "binary_io.hpp"
#include "gencs/bench.hpp"
#include "gencs/errors.hpp"
#include "json.hpp"

namespace gencs {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::uint64_t kInitStream = 0x494E4954;
constexpr std::uint64_t kNoiseStream = 0x4E4F4953;
constexpr std::uint64_t kHeldoutStream = 0x48454C44;
constexpr std::uint64_t kLemmaStream = 0x4C454D4D;

void write_json(const std::filesystem::path& path, const ojson& j) {
  const std::string text = j.dump(2) + "\n";
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

// JSON has no infinities; they become strings rather than null.
ojson num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

ojson snr_json(double snr) { return std::isnan(snr) ? ojson("none") : ojson(snr); }

bool uses(const ExperimentConfig& cfg, const std::string& algorithm) {
  return std::find(cfg.algorithms.begin(), cfg.algorithms.end(), algorithm) != cfg.algorithms.end();
}

std::size_t measurement_count(double rate, std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate * static_cast<double>(n))));
}

SignalSet block_set(const SignalSet& set, const BlockSpec& spec, const BlockPosition& pos) {
  SignalSet out;
  out.n = spec.block_size.first * spec.block_size.second;
  out.source = set.source + ":block";
  for (const auto& s : set.signals) out.signals.push_back(extract_block(s, spec, pos));
  return out;
}

Autoencoder initial_model(const ExperimentConfig& cfg, std::size_t n, std::uint64_t stream) {
  Rng rng(cfg.train.seed, stream);
  const auto& arch = cfg.architecture;
  if (cfg.train.freeze_decoder) {
    const auto& d = cfg.dataset;
    if (arch.k != d.synthetic_k) {
      throw ConfigError("architecture.k: must equal dataset.synthetic.k when the decoder is frozen");
    }
    std::vector<LayerSpec> specs;
    std::size_t in = n;
    for (auto h : arch.hidden) {
      specs.push_back({in, h, arch.activation});
      in = h;
    }
    specs.push_back({in, arch.k, Activation::sigmoid});
    auto decoder = make_synthetic(d.synthetic_k, d.synthetic_n, d.synthetic_hidden, d.synthetic_seed, d.synthetic_gain)
                       .decoder();
    return Autoencoder(Mlp::glorot(specs, rng), decoder);
  }
  return Autoencoder::make(n, arch.hidden, arch.k, arch.activation, rng);
}

ModelReport train_one(const ExperimentConfig& cfg, const SignalSet& train_set, const SignalSet& test_set,
                      const std::filesystem::path& weights, std::uint64_t stream) {
  const auto result = train(initial_model(cfg, train_set.n, stream), train_set, cfg.train);
  save_weights(result.model, weights);
  ModelReport r;
  r.weights = weights;
  r.checksum = file_checksum(weights);
  r.delta_hat = representation_error(result.model, test_set);
  r.delta_hat_train = representation_error(result.model, train_set);
  r.lipschitz = lipschitz_upper_bound(result.model.decoder());
  r.initial_loss = result.initial_loss;
  r.loss_history = result.loss_history;
  r.test_loss = reconstruction_loss(result.model, test_set);
  return r;
}

Autoencoder load_trained(const std::filesystem::path& path, std::size_t n) {
  if (!std::filesystem::exists(path)) {
    throw FormatError(FormatErrorKind::io,
                      "weights " + path.string() + " not found; run `gencs train-ae --config <same config>` first");
  }
  auto ae = load_weights(path);
  if (ae.n() != n) {
    throw FormatError(FormatErrorKind::dimension_mismatch, "weights " + path.string() + " expect n=" +
                                                               std::to_string(ae.n()) + ", data has n=" +
                                                               std::to_string(n));
  }
  return ae;
}

std::uint64_t cell_key(std::size_t m, double snr, std::uint64_t image) {
  const std::uint64_t snr_bits = std::isnan(snr) ? 0x7FF8000000000000ULL : std::bit_cast<std::uint64_t>(snr);
  return mix64(mix64(mix64(m) ^ snr_bits) ^ image);
}

double sigma_for(double snr, const SensingOperator& op, const Vector& x) {
  return std::isnan(snr) ? 0.0 : snr_to_sigma(snr, op, x);
}

}  // namespace

TrainReport cmd_train_ae(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = load_dataset(cfg.dataset);
  TrainReport report;
  if (!cfg.blocks) {
    report.models.push_back(train_one(cfg, data.train, data.test, cfg.weights, kInitStream));
  } else {
    const auto layout = block_layout(*cfg.blocks);
    for (std::size_t b = 0; b < layout.size(); ++b) {
      report.models.push_back(train_one(cfg, block_set(data.train, *cfg.blocks, layout[b]),
                                        block_set(data.test, *cfg.blocks, layout[b]), cfg.block_weights(b),
                                        kInitStream + 1 + b));
    }
  }

  ojson j;
  j["name"] = cfg.name;
  j["dataset"] = data.train.source;
  j["train_count"] = data.train.size();
  j["test_count"] = data.test.size();
  j["delta_hat_set"] = "test";
  ojson models = ojson::array();
  for (std::size_t i = 0; i < report.models.size(); ++i) {
    const auto& m = report.models[i];
    ojson e;
    if (cfg.blocks) e["block"] = i;
    e["weights"] = m.weights.filename().string();
    e["checksum"] = m.checksum;
    e["delta_hat"] = m.delta_hat;
    e["delta_hat_train"] = m.delta_hat_train;
    e["lipschitz_upper_bound"] = num(m.lipschitz);
    e["initial_loss"] = m.initial_loss;
    e["final_loss"] = m.loss_history.empty() ? m.initial_loss : m.loss_history.back();
    e["test_loss"] = m.test_loss;
    e["loss_history"] = m.loss_history;
    models.push_back(std::move(e));
  }
  j["models"] = std::move(models);
  report.report_json = cfg.output_dir / "train_report.json";
  write_json(report.report_json, j);
  return report;
}

SweepOutput cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = load_dataset(cfg.dataset);
  const std::size_t n = data.test.n;
  const bool need_ae = uses(cfg, "ae-pgd") || uses(cfg, "latent-gd") || uses(cfg, "exhaustive");
  const bool lasso = uses(cfg, "lasso-dct");

  std::vector<BlockPosition> layout;
  std::vector<Autoencoder> aes;
  std::vector<std::string> checksums;
  if (cfg.blocks) layout = block_layout(*cfg.blocks);
  if (need_ae) {
    if (cfg.blocks) {
      const std::size_t nb = cfg.blocks->block_size.first * cfg.blocks->block_size.second;
      for (std::size_t b = 0; b < layout.size(); ++b) {
        aes.push_back(load_trained(cfg.block_weights(b), nb));
        checksums.push_back(file_checksum(cfg.block_weights(b)));
      }
    } else {
      aes.push_back(load_trained(cfg.weights, n));
      checksums.push_back(file_checksum(cfg.weights));
    }
  }

  const auto& rates = cfg.sampling_rates;
  const auto snrs = cfg.snr_cells();
  const auto& seeds = cfg.seeds;
  const std::size_t images = data.test.size();

  struct OperatorSet {
    std::size_t m = 0;
    SensingOperator op;
    std::vector<SensingOperator> block_ops;
    std::optional<LassoDctPlan> plan;
  };
  const Matrix dct = lasso ? dct_basis(n) : Matrix();
  std::vector<OperatorSet> ops(rates.size() * seeds.size());
  parallel_for(ops.size(), [&](std::size_t idx) {
    const double rate = rates[idx / seeds.size()];
    const std::uint64_t seed = seeds[idx % seeds.size()];
    auto& set = ops[idx];
    if (cfg.blocks) {
      const std::size_t nb = cfg.blocks->block_size.first * cfg.blocks->block_size.second;
      const std::size_t mb = measurement_count(rate, nb);
      for (std::size_t b = 0; b < layout.size(); ++b) {
        set.block_ops.push_back(make_operator(mb, nb, seed, ((b + 1) << 32) | mb));
      }
      set.m = mb * layout.size();
    } else {
      set.m = measurement_count(rate, n);
    }
    set.op = make_operator(set.m, n, seed, set.m);
    if (lasso) set.plan = make_lasso_plan(set.op, dct);
  });

  // λ per (rate, snr, seed), chosen by mean held-out PSNR.
  const auto& grid = cfg.lasso.lambda_grid;
  std::vector<double> lambda(rates.size() * snrs.size() * seeds.size(), grid.empty() ? 0.0 : grid.front());
  if (lasso && grid.size() > 1) {
    std::vector<double> score(lambda.size() * grid.size(), 0.0);
    parallel_for(score.size(), [&](std::size_t idx) {
      const std::size_t cell = idx / grid.size();
      const std::size_t r = cell / (snrs.size() * seeds.size());
      const std::size_t s = (cell / seeds.size()) % snrs.size();
      const std::size_t sd = cell % seeds.size();
      const auto& set = ops[r * seeds.size() + sd];
      double total = 0.0;
      for (std::size_t i = 0; i < data.heldout.size(); ++i) {
        const Vector& x = data.heldout.signals[i];
        Rng rng = Rng(seeds[sd], kHeldoutStream).derive(cell_key(set.m, snrs[s], i));
        const Vector y = measure(set.op, x, {sigma_for(snrs[s], set.op, x)}, rng);
        total += psnr(x, ista_lasso_dct(*set.plan, y, grid[idx % grid.size()], cfg.lasso.iters).x_hat);
      }
      score[idx] = total / static_cast<double>(data.heldout.size());
    });
    for (std::size_t c = 0; c < lambda.size(); ++c) {
      std::size_t best = 0;
      for (std::size_t g = 1; g < grid.size(); ++g) {
        if (score[c * grid.size() + g] > score[c * grid.size() + best]) best = g;
      }
      lambda[c] = grid[best];
    }
  }

  const std::size_t cells = rates.size() * snrs.size() * seeds.size() * images;
  std::vector<ResultRow> rows(cfg.algorithms.size() * cells);
  parallel_for(cells, [&](std::size_t idx) {
    const std::size_t i = idx % images;
    const std::size_t sd = (idx / images) % seeds.size();
    const std::size_t s = (idx / (images * seeds.size())) % snrs.size();
    const std::size_t r = idx / (images * seeds.size() * snrs.size());
    const auto& set = ops[r * seeds.size() + sd];
    const Vector& x = data.test.signals[i];
    const double snr = snrs[s];

    Rng rng = Rng(seeds[sd], kNoiseStream).derive(cell_key(set.m, snr, i));
    std::optional<Vector> y;
    std::vector<Vector> y_blocks;
    auto full_y = [&]() -> const Vector& {
      if (!y) y = measure(set.op, x, {sigma_for(snr, set.op, x)}, rng);
      return *y;
    };

    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      const auto& name = cfg.algorithms[a];
      ResultRow row{name, set.m, n, snr, seeds[sd], i, 0.0, 0, 0.0};
      RecoveryResult result;
      const auto start = std::chrono::steady_clock::now();
      if (name == "ae-pgd" && cfg.blocks) {
        if (y_blocks.empty()) {
          std::vector<double> sigmas;
          for (std::size_t b = 0; b < layout.size(); ++b) {
            sigmas.push_back(sigma_for(snr, set.block_ops[b], extract_block(x, *cfg.blocks, layout[b])));
          }
          Rng block_rng = rng.derive(0x424C4B);
          y_blocks = measure_blocks(x, *cfg.blocks, set.block_ops, sigmas, block_rng);
        }
        result = blockwise_recover(x, *cfg.blocks, set.block_ops, aes, cfg.pgd, y_blocks);
      } else if (name == "ae-pgd") {
        result = ae_pgd(set.op, full_y(), aes.front(), cfg.pgd);
      } else if (name == "latent-gd") {
        const Vector u0 = Vector::Constant(static_cast<Eigen::Index>(aes.front().k()), 0.5);
        result = latent_gd(set.op, full_y(), aes.front().decoder(), u0, cfg.latent_gd.learning_rate,
                           cfg.latent_gd.iters);
      } else if (name == "lasso-dct") {
        const double lam = lambda[(r * snrs.size() + s) * seeds.size() + sd];
        result = ista_lasso_dct(*set.plan, full_y(), lam, cfg.lasso.iters);
      } else {
        result = exhaustive_quantized(set.op, full_y(), aes.front().decoder(), cfg.exhaustive.bits,
                                      cfg.exhaustive.budget);
      }
      row.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      row.psnr = psnr(x, result.x_hat);
      row.iters = result.iters_used;
      rows[a * cells + idx] = std::move(row);
    }
  });

  std::filesystem::create_directories(cfg.output_dir);
  SweepOutput out;
  out.results_csv = cfg.output_dir / "results.csv";
  out.timings_csv = cfg.output_dir / "timings.csv";
  out.summary_json = cfg.output_dir / "summary.json";

  std::string csv = results_csv_header();
  std::string timings = "algorithm,m,n,snr_db,seed,image_index,wall_time_ms\n";
  for (const auto& row : rows) {
    csv += format_result_row(row);
    timings += row.algorithm + "," + std::to_string(row.m) + "," + std::to_string(row.n) + "," +
               (std::isnan(row.snr_db) ? std::string("none") : format_double(row.snr_db)) + "," +
               std::to_string(row.seed) + "," + std::to_string(row.image_index) + "," +
               format_double(std::round(row.wall_time_ms * 1000.0) / 1000.0) + "\n";
  }
  write_text(out.results_csv, csv);
  write_text(out.timings_csv, timings);

  ojson j;
  j["name"] = cfg.name;
  j["n"] = n;
  j["test_images"] = images;
  j["reference_test_images"] = 300;
  j["note"] = "desk-scale run: PSNR averages use test_images images; the reference protocol averages 300";
  j["seeds"] = seeds;
  j["weights_checksums"] = checksums;
  ojson lam = ojson::array();
  if (lasso) {
    for (std::size_t r = 0; r < rates.size(); ++r) {
      for (std::size_t s = 0; s < snrs.size(); ++s) {
        for (std::size_t sd = 0; sd < seeds.size(); ++sd) {
          lam.push_back({{"rate", rates[r]},
                         {"m", ops[r * seeds.size() + sd].m},
                         {"snr_db", snr_json(snrs[s])},
                         {"seed", seeds[sd]},
                         {"lambda", lambda[(r * snrs.size() + s) * seeds.size() + sd]}});
        }
      }
    }
  }
  j["lasso_lambda"] = std::move(lam);
  ojson summary = ojson::array();
  const std::size_t per_group = seeds.size() * images;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    for (std::size_t r = 0; r < rates.size(); ++r) {
      for (std::size_t s = 0; s < snrs.size(); ++s) {
        const std::size_t begin = a * cells + (r * snrs.size() + s) * per_group;
        double mean = 0.0, mean_iters = 0.0;
        std::size_t max_iters = 0;
        for (std::size_t q = 0; q < per_group; ++q) {
          mean += rows[begin + q].psnr;
          mean_iters += static_cast<double>(rows[begin + q].iters);
          max_iters = std::max(max_iters, rows[begin + q].iters);
        }
        mean /= static_cast<double>(per_group);
        mean_iters /= static_cast<double>(per_group);
        double var = 0.0;
        for (std::size_t q = 0; q < per_group && per_group > 1; ++q) {
          var += (rows[begin + q].psnr - mean) * (rows[begin + q].psnr - mean);
        }
        if (per_group > 1) var /= static_cast<double>(per_group - 1);
        summary.push_back({{"algorithm", cfg.algorithms[a]},
                           {"rate", rates[r]},
                           {"m", rows[begin].m},
                           {"snr_db", snr_json(snrs[s])},
                           {"count", per_group},
                           {"mean_psnr", num(mean)},
                           {"std_psnr", num(std::sqrt(var))},
                           {"mean_iters", mean_iters},
                           {"max_iters", max_iters}});
      }
    }
  }
  j["cells"] = std::move(summary);
  write_json(out.summary_json, j);
  out.rows = std::move(rows);
  return out;
}

ContractionReport run_contraction(const ContractionSpec& spec) {
  if (spec.trials == 0) throw ParameterError("contraction: trials must be >= 1");
  ContractionReport report;
  report.spec = spec;
  const auto manifold = make_synthetic(spec.k, spec.n, spec.decoder_hidden, spec.manifold_seed, spec.decoder_gain);
  Rng sample_rng(spec.manifold_seed, 0x54524E);
  const auto train_set = manifold.sample_set(spec.train_samples, sample_rng);
  Rng delta_rng(spec.manifold_seed, 0x444C54);
  const auto delta_set = manifold.sample_set(spec.delta_samples, delta_rng);

  std::vector<LayerSpec> specs;
  std::size_t in = spec.n;
  for (auto h : spec.encoder_hidden) {
    specs.push_back({in, h, spec.encoder_activation});
    in = h;
  }
  specs.push_back({in, spec.k, Activation::sigmoid});
  Rng init(spec.train.seed, kInitStream);
  TrainConfig tc = spec.train;
  tc.freeze_decoder = true;
  const auto trained = train(Autoencoder(Mlp::glorot(specs, init), manifold.decoder()), train_set, tc).model;

  report.delta_hat = representation_error(trained, delta_set);
  report.lipschitz = lipschitz_upper_bound(manifold.decoder());
  const double delta = std::max(report.delta_hat, 1e-12);
  if (spec.m > 0) {
    report.m = spec.m;
  } else {
    const auto by_delta = static_cast<std::size_t>(std::ceil(40.0 * static_cast<double>(spec.k) * std::log2(1.0 / delta)));
    report.m = std::max(by_delta, (spec.n + 1) / 2);
  }
  report.constants = theorem2_constants(spec.k, spec.n, report.m, report.lipschitz, std::min(delta, 0.999999),
                                        spec.alpha, spec.upsilon);

  PgdConfig pgd;
  pgd.step_size = spec.step_size;
  pgd.step_scale = StepScale::unit_columns;
  pgd.max_iters = spec.max_iters;
  const double root_n = std::sqrt(static_cast<double>(spec.n));
  const double target = 2.0 * report.delta_hat + 1e-3;
  Vector centroid = Vector::Zero(static_cast<Eigen::Index>(spec.n));
  for (const auto& x : train_set.signals) centroid += x;
  if (!train_set.empty()) centroid /= static_cast<double>(train_set.size());
  std::vector<double> centroid_error(spec.trials);
  report.trials.resize(spec.trials);
  parallel_for(spec.trials, [&](std::size_t t) {
    Rng rng(spec.trial_seed, t);
    const auto [u, x] = manifold.sample_uniform(rng);
    const auto op = make_operator(report.m, spec.n, spec.trial_seed, 0x43540000ULL + t);
    const Vector y = op.A * x;
    const auto result = ae_pgd(op, y, trained, pgd, true);
    auto& trial = report.trials[t];
    centroid_error[t] = (centroid - x).norm() / root_n;
    for (const auto& xt : result.trace) trial.errors.push_back((xt - x).norm() / root_n);
    trial.final_error = (result.x_hat - x).norm() / root_n;
    trial.iters = result.iters_used;
    trial.within_target = trial.final_error <= target;
    trial.bound_respected = true;
    for (std::size_t s = 0; s + 1 < trial.errors.size(); ++s) {
      const double predicted = predict_next_error(trial.errors[s], report.constants, 0.0, spec.n, spec.k, report.m,
                                                  report.lipschitz, delta, spec.alpha);
      if (trial.errors[s + 1] > predicted + 1e-12) trial.bound_respected = false;
    }
  });
  for (std::size_t t = 0; t < spec.trials; ++t) {
    report.within_target += report.trials[t].within_target;
    report.bound_respected += report.trials[t].bound_respected;
    report.centroid_within_target += centroid_error[t] <= target;
    report.mean_centroid_distance += centroid_error[t] / static_cast<double>(spec.trials);
  }
  const double need = 0.9 * static_cast<double>(spec.trials);
  report.pass = !report.constants.contraction_ok ||
                (static_cast<double>(report.within_target) >= need && static_cast<double>(report.bound_respected) >= need);
  return report;
}

std::filesystem::path cmd_verify_theory(const ExperimentConfig& cfg) {
  const auto& th = cfg.theory;
  const auto& plan = th.lemmas;
  ojson checks = ojson::array();
  bool all_pass = true;
  auto add = [&](const std::string& name, ojson params, ojson empirical, ojson bound, bool pass, ojson details) {
    ojson e;
    e["lemma"] = name;
    e["params"] = std::move(params);
    e["empirical"] = std::move(empirical);
    e["bound"] = std::move(bound);
    e["pass"] = pass;
    if (!details.is_null()) e["details"] = std::move(details);
    checks.push_back(std::move(e));
    all_pass = all_pass && pass;
  };
  auto lemma_entry = [&](const LemmaCheck& c, ojson params) {
    add(c.lemma, std::move(params), c.empirical, num(c.bound), c.pass,
        {{"half_width", c.half_width}, {"trials", c.trials}});
  };

  const Rng base(plan.seed, kLemmaStream);
  std::uint64_t sub = 0;
  for (const auto& c : plan.lemma1) {
    Rng rng = base.derive(sub++);
    lemma_entry(verify_lemma1(c.m, c.tau, plan.trials, rng, c.lower ? Tail::lower : Tail::upper),
                {{"m", c.m}, {"tau", c.tau}, {"tail", c.lower ? "lower" : "upper"}});
  }
  for (auto m : plan.lemma2_m) {
    for (auto pairing : {Lemma2Pairing::independent, Lemma2Pairing::identical}) {
      Rng rng = base.derive(sub++);
      const bool same = pairing == Lemma2Pairing::identical;
      lemma_entry(verify_lemma2(plan.lemma2_n, m, plan.trials, rng, pairing),
                  {{"n", plan.lemma2_n}, {"m", m}, {"pairing", same ? "identical" : "independent"}});
    }
  }
  for (auto n : plan.lemma3_n) {
    Rng rng = base.derive(sub++);
    const auto c = verify_lemma3(n, plan.trials, rng);
    add("lemma3", {{"n", n}}, c.ks_statistic, c.critical_value, c.pass,
        {{"mean", c.mean}, {"stderr_mean", c.stderr_mean}, {"trials", c.trials}, {"statistic", "two-sample KS"}});
  }
  for (const auto& p : th.theorem1) {
    const auto b = theorem1_bound(p);
    const bool ok = std::isfinite(b.error_bound) && std::isfinite(b.prob_lower_bound) && b.prob_lower_bound <= 1.0;
    add("theorem1",
        {{"k", p.k}, {"n", p.n}, {"m", p.m}, {"L", p.L}, {"delta", p.delta}, {"sigma", p.sigma}, {"eta", p.eta},
         {"upsilon", p.upsilon}, {"latent_range", p.latent_range}},
        nullptr, num(b.error_bound), ok,
        {{"alpha_term", b.alpha_term},
         {"noise_cross_term", b.noise_cross_term},
         {"noise_term", b.noise_term},
         {"zeta", b.zeta},
         {"prob_lower_bound", b.prob_lower_bound},
         {"vacuous", b.vacuous},
         {"log_base", "natural"}});
  }
  for (const auto& c : th.theorem2) {
    const auto k = theorem2_constants(c.k, c.n, c.m, c.L, c.delta, c.alpha, c.upsilon);
    add("theorem2",
        {{"k", c.k}, {"n", c.n}, {"m", c.m}, {"L", c.L}, {"delta", c.delta}, {"alpha", c.alpha}, {"upsilon", c.upsilon}},
        nullptr, 0.9 + k.eta, std::isfinite(k.eta) && std::isfinite(k.gamma1) && std::isfinite(k.gamma2),
        {{"eta", k.eta},
         {"gamma1", k.gamma1},
         {"gamma2", k.gamma2},
         {"m_required", k.m_required},
         {"contraction_ok", k.contraction_ok},
         {"log_base", "2 (measurement requirement)"}});
  }
  for (const auto& spec : th.contraction) {
    const auto r = run_contraction(spec);
    const double frac = static_cast<double>(r.within_target) / static_cast<double>(r.trials.size());
    double mean_iters = 0.0;
    for (const auto& t : r.trials) mean_iters += static_cast<double>(t.iters);
    mean_iters /= static_cast<double>(r.trials.size());
    add("theorem2_contraction",
        {{"k", spec.k}, {"n", spec.n}, {"m", r.m}, {"decoder_gain", spec.decoder_gain}, {"trials", spec.trials}, {"step_size", spec.step_size},
         {"alpha", spec.alpha}, {"upsilon", spec.upsilon}},
        frac, 0.9, r.pass,
        {{"delta_hat", r.delta_hat},
         {"lipschitz_upper_bound", num(r.lipschitz)},
         {"target", 2.0 * r.delta_hat + 1e-3},
         {"within_target", r.within_target},
         {"bound_respected", r.bound_respected},
         {"centroid_within_target", r.centroid_within_target},
         {"mean_centroid_distance", r.mean_centroid_distance},
         {"mean_iters", mean_iters},
         {"eta", r.constants.eta},
         {"m_required", r.constants.m_required},
         {"contraction_ok", r.constants.contraction_ok},
         {"vacuous", !r.constants.contraction_ok}});
  }

  ojson j;
  j["name"] = cfg.name;
  j["log_base_note"] =
      "theorem1 terms use natural logs; theorem2 m_required uses log base 2. "
      "Both are written log(1/delta) in their statements, without a consistent base.";
  j["all_pass"] = all_pass;
  j["checks"] = std::move(checks);
  const auto path = cfg.output_dir / "theory_report.json";
  write_json(path, j);
  return path;
}

}  // namespace gencs
