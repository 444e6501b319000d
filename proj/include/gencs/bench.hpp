#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gencs/data.hpp"
#include "gencs/model.hpp"
#include "gencs/recovery.hpp"
#include "gencs/theory.hpp"

namespace gencs {

struct DatasetSpec {
  /// "mnist" (IDX files), "signals" (GENCS-SIG file) or "synthetic".
  std::string kind = "mnist";
  std::filesystem::path images;
  std::optional<std::filesystem::path> labels;
  /// Image shape, needed for block layouts and IDX round trips.
  std::size_t rows = 28;
  std::size_t cols = 28;
  std::size_t train_count = 2000;
  std::size_t test_count = 100;
  /// Images after the test slice used to tune Lasso's λ.
  std::size_t heldout_count = 20;
  /// Index of the first training image in the source file.
  std::size_t offset = 0;
  // synthetic only
  std::size_t synthetic_k = 8;
  std::size_t synthetic_n = 256;
  std::size_t synthetic_hidden = 64;
  std::uint64_t synthetic_seed = 1;
  double synthetic_gain = 1.0;
};

struct ArchitectureSpec {
  std::size_t k = 20;
  std::vector<std::size_t> hidden{200};
  Activation activation = Activation::sigmoid;
};

struct LassoSpec {
  std::vector<double> lambda_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  std::size_t iters = 500;
};

struct LatentGdSpec {
  double learning_rate = 0.05;
  std::size_t iters = 200;
};

struct ExhaustiveSpec {
  unsigned bits = 2;
  std::size_t budget = 1'000'000;
};

struct LemmaPlan {
  std::size_t trials = 100'000;
  std::uint64_t seed = 7;
  /// (m, τ, lower tail?) triples.
  struct Lemma1Case {
    std::size_t m;
    double tau;
    bool lower;
  };
  std::vector<Lemma1Case> lemma1{{50, 0.5, false}, {50, 1.0, false}, {100, 0.5, false}, {100, 1.0, false},
                                 {400, 0.5, false}, {400, 1.0, false}, {100, 0.5, true}};
  std::vector<std::size_t> lemma2_m{100, 400};
  /// Ambient dimension for the lemma2 unit vectors.
  std::size_t lemma2_n = 64;
  std::vector<std::size_t> lemma3_n{1, 10, 50};
};

struct ContractionSpec {
  std::size_t k = 8;
  std::size_t n = 256;
  std::size_t decoder_hidden = 64;
  double decoder_gain = 4.0;
  std::vector<std::size_t> encoder_hidden{128};
  Activation encoder_activation = Activation::relu;
  std::uint64_t manifold_seed = 11;
  std::size_t train_samples = 2000;
  std::size_t delta_samples = 200;
  TrainConfig train{.epochs = 30, .batch_size = 16, .learning_rate = 3e-3, .seed = 3, .freeze_decoder = true};
  std::size_t trials = 100;
  std::uint64_t trial_seed = 100;
  /// Zero picks max(ceil(40 k log2(1/δ̂)), n/2).
  std::size_t m = 0;
  /// μ in the unit-column convention, i.e. μ = 1/m for standard normal A.
  double step_size = 1.0;
  std::size_t max_iters = 100;
  double alpha = 0.5;
  double upsilon = 0.1;
};

struct TheorySpec {
  LemmaPlan lemmas;
  std::vector<Theorem1Params> theorem1;
  struct Theorem2Case {
    std::size_t k, n, m;
    double L, delta, alpha, upsilon;
  };
  std::vector<Theorem2Case> theorem2;
  std::vector<ContractionSpec> contraction;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  ArchitectureSpec architecture;
  TrainConfig train;
  std::vector<double> sampling_rates{0.05, 0.1, 0.2, 0.3};
  /// NaN marks the noiseless case; an empty list means noiseless only.
  std::vector<double> snr_db_list;
  std::vector<std::string> algorithms{"ae-pgd", "lasso-dct"};
  PgdConfig pgd;
  LassoSpec lasso;
  LatentGdSpec latent_gd;
  ExhaustiveSpec exhaustive;
  std::optional<BlockSpec> blocks;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "results";
  /// Defaults to output_dir/ae.weights.
  std::filesystem::path weights;
  /// Weight file for one block position: <stem>_block<i><ext>.
  std::filesystem::path block_weights(std::size_t block) const;
  TheorySpec theory;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// snr_db_list with the noiseless entry substituted when empty.
  std::vector<double> snr_cells() const;
};

/// Relative paths inside the config resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

struct DatasetSplit {
  SignalSet train;
  SignalSet test;
  SignalSet heldout;
};

/// Throws FormatError when the source files are missing or malformed.
DatasetSplit load_dataset(const DatasetSpec& spec);

struct ResultRow {
  std::string algorithm;
  std::size_t m = 0;
  std::size_t n = 0;
  /// NaN for the noiseless case.
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::size_t image_index = 0;
  double psnr = 0.0;
  std::size_t iters = 0;
  double wall_time_ms = 0.0;
};

struct ModelReport {
  std::filesystem::path weights;
  std::string checksum;
  double delta_hat = 0.0;
  double delta_hat_train = 0.0;
  double lipschitz = 0.0;
  double initial_loss = 0.0;
  std::vector<double> loss_history;
  double test_loss = 0.0;
};

struct TrainReport {
  /// One entry, or one per block position when blocks are configured.
  std::vector<ModelReport> models;
  std::filesystem::path report_json;
};

struct SweepOutput {
  std::vector<ResultRow> rows;
  std::filesystem::path results_csv;
  std::filesystem::path summary_json;
  std::filesystem::path timings_csv;
};

TrainReport cmd_train_ae(const ExperimentConfig& cfg);
SweepOutput cmd_sweep(const ExperimentConfig& cfg);
/// Writes theory_report.json into cfg.output_dir; returns its path.
std::filesystem::path cmd_verify_theory(const ExperimentConfig& cfg);
/// Reads results.csv in `dir`, writes psnr_snr-<snr>.tsv files and
/// iterations.tsv; returns the paths written.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& dir);

std::string results_csv_header();
std::string format_result_row(const ResultRow& row);
std::vector<ResultRow> parse_results_csv(const std::string& text);

/// Shortest text that reads back as the same double; "inf"/"-inf"/"nan".
std::string format_double(double v);

struct ContractionTrial {
  double final_error = 0.0;
  std::size_t iters = 0;
  /// (1/√n)‖x̂ᵗ - x‖ for t = 0, 1, ...
  std::vector<double> errors;
  bool within_target = false;
  /// Every step satisfied errors[t+1] <= predict_next_error(errors[t]).
  bool bound_respected = false;
};

struct ContractionReport {
  ContractionSpec spec;
  double delta_hat = 0.0;
  double lipschitz = 0.0;
  std::size_t m = 0;
  Theorem2Constants constants;
  std::vector<ContractionTrial> trials;
  std::size_t within_target = 0;
  std::size_t bound_respected = 0;
  /// Trials where the mean training sample alone would meet the target;
  /// near zero means the target is not met trivially.
  std::size_t centroid_within_target = 0;
  /// Mean (1/√n)‖x - x̄‖ over the trials.
  double mean_centroid_distance = 0.0;
  /// contraction_ok and both counts reach 90% of trials; true when the
  /// bound is vacuous, since nothing is then asserted.
  bool pass = false;
};

/// Trains an encoder onto a random sigmoid manifold, then runs noiseless
/// AE-PGD from fresh manifold points with target (1/√n)‖x̂ - x‖ <= 2δ̂ + 1e-3.
ContractionReport run_contraction(const ContractionSpec& spec);

/// Runs `task(i)` for i in [0, count) on up to GENCS_THREADS workers
/// (default: hardware concurrency). The first exception by index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);
std::size_t worker_count();

}  // namespace gencs
