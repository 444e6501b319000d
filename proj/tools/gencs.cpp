#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "gencs/bench.hpp"
#include "gencs/errors.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;

int run(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const gencs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const gencs::ParameterError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const gencs::InfeasibleScaleError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const gencs::SpecError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const gencs::FormatError& e) {
    std::fprintf(stderr, "data error (%s): %s\n", std::string(gencs::to_string(e.kind())).c_str(), e.what());
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed sensing with auto-encoder priors"};
  app.require_subcommand(1);

  std::string config;
  std::string dir;
  auto* train = app.add_subcommand("train-ae", "Train the auto-encoder and write weights + train_report.json");
  train->add_option("--config", config, "Experiment config (JSON)")->required();
  auto* sweep = app.add_subcommand("sweep", "Run recovery over rates x SNRs x seeds x images");
  sweep->add_option("--config", config, "Experiment config (JSON)")->required();
  auto* theory = app.add_subcommand("verify-theory", "Monte-Carlo lemma checks and bound evaluation");
  theory->add_option("--config", config, "Experiment config (JSON)")->required();
  auto* report = app.add_subcommand("report", "Aggregate results.csv into plot-data TSV files");
  report->add_option("--dir", dir, "Directory holding results.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  if (*train) {
    return run([&] {
      const auto r = gencs::cmd_train_ae(gencs::load_config(config));
      for (const auto& m : r.models) {
        std::printf("%s  checksum %s  delta_hat %.6g  L_hat %.6g  test_loss %.6g\n", m.weights.string().c_str(),
                    m.checksum.c_str(), m.delta_hat, m.lipschitz, m.test_loss);
      }
      std::printf("report: %s\n", r.report_json.string().c_str());
    });
  }
  if (*sweep) {
    return run([&] {
      const auto r = gencs::cmd_sweep(gencs::load_config(config));
      std::printf("%zu rows -> %s\nsummary: %s\n", r.rows.size(), r.results_csv.string().c_str(),
                  r.summary_json.string().c_str());
    });
  }
  if (*theory) {
    return run([&] {
      const auto path = gencs::cmd_verify_theory(gencs::load_config(config));
      std::printf("report: %s\n", path.string().c_str());
    });
  }
  return run([&] {
    for (const auto& p : gencs::cmd_report(dir)) std::printf("%s\n", p.string().c_str());
  });
}
