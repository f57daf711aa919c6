#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "krrlab/errors.hpp"
#include "krrlab/harness.hpp"
#include "krrlab/theory.hpp"

namespace {

std::string exponent(const std::optional<double>& v) { return v ? fmt::format("{:.4g}", *v) : "undetermined"; }

void print_prediction(const krrlab::RatePrediction& p) {
  fmt::print("regime: {}\n", krrlab::to_string(p.regime));
  fmt::print("bias exponent: {}{}\n", exponent(p.bias_exponent), p.upper_bound ? " (upper bound)" : "");
  fmt::print("variance exponent: {}\n", exponent(p.variance_exponent));
  fmt::print("risk exponent: {}\n", exponent(p.risk_exponent));
  fmt::print("noise floor: {}\n", p.floor == krrlab::NoiseFloor::constant_sigma2 ? "constant sigma2" : "none");
  if (p.log_factor) fmt::print("log factor: yes (s = 2)\n");
  if (p.on_boundary) fmt::print("on the bias/variance boundary\n");
  if (p.not_covered) {
    fmt::print("not covered: no bias rate is established for s <= 1 at theta >= beta (min(s,2) beta = {:.4g})\n",
               *p.conjectured_bias_exponent);
  }
  if (p.minimax_lower_exponent) fmt::print("information-theoretic floor exponent: {:.4g}\n", *p.minimax_lower_exponent);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel ridge regression learning-curve experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "results";
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool fast = false;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--fast", fast, "20 trials, n <= 3000, tolerances x1.5");
  };

  auto* sweep = app.add_subcommand("sweep", "Run a configured sweep");
  sweep->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  common(sweep);

  std::size_t trials = 100;
  double c = 0.005;
  double sigma2 = 0.05;
  auto* table = app.add_subcommand("table1", "Rate table over theta and targets");
  table->add_option("--trials", trials, "Trials per cell");
  table->add_option("--c", c, "lambda prefactor");
  table->add_option("--sigma2", sigma2, "Noise variance");
  common(table);

  auto* cross = app.add_subcommand("crossover", "Noiseless-to-noisy learning curves");
  cross->add_option("--trials", trials, "Trials per cell");
  cross->add_option("--c", c, "lambda prefactor");
  common(cross);

  double s = 1.5;
  double beta = 2.0;
  double theta = 0.5;
  double tau = 0.0;
  bool noiseless = false;
  bool optimal = false;
  std::string phase;
  std::size_t resolution = 60;
  const auto theory_options = [&](CLI::App* sub) {
    sub->add_option("--s", s, "Source smoothness (inf allowed)");
    sub->add_option("--beta", beta, "Eigenvalue decay");
    sub->add_option("--theta", theta, "Regularization exponent");
    sub->add_option("--tau", tau, "Noise decay exponent");
    sub->add_flag("--noiseless", noiseless, "No noise");
    sub->add_flag("--optimal", optimal, "Print theta_op and its rate");
    sub->add_option("--phase", phase, "Print a phase raster over (theta, s) or (theta, tau)")
        ->check(CLI::IsMember({"s", "tau"}));
    sub->add_option("--resolution", resolution, "Raster points per axis");
  };
  auto* theory = app.add_subcommand("theory", "Predicted exponents");
  theory_options(theory);
  auto* phase_cmd = app.add_subcommand("phase-diagram", "Phase raster CSV");
  theory_options(phase_cmd);
  phase_cmd->add_option("--out", out_dir, "Output directory");

  std::size_t cells = 20;
  std::size_t draws = 2000;
  auto* selftest = app.add_subcommand("selftest", "Exact risk against the Monte Carlo oracle");
  selftest->add_option("--cells", cells, "Random cells");
  selftest->add_option("--draws", draws, "Noise draws per cell");
  selftest->add_option("--seed", seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      auto config = krrlab::ExperimentConfig::from_file(config_path);
      if (seed) config.master_seed = *seed;
      if (fast) config.fast = true;
      const auto result = krrlab::run_sweep(config, workers);
      krrlab::write_outputs(result, out_dir, config.output);
      for (const auto& curve : result.curves) {
        for (const auto& check : curve.checks) {
          fmt::print("{} {} sigma2={} {}: {:.3f} vs {:.3f} (tol {:.3f}) {}\n", curve.target, curve.schedule.label(),
                     curve.sigma2, check.quantity, check.empirical, check.theory, check.tolerance,
                     check.pass ? "PASS" : "FAIL");
        }
      }
      fmt::print("failed rows: {}, max residual: {:.3g}\n", result.failed_rows, result.max_residual);
      return result.all_passed() ? 0 : 1;
    }
    if (*table) {
      krrlab::Table1Options options;
      options.trials = trials;
      options.c = c;
      options.sigma2 = sigma2;
      options.fast = fast;
      if (seed) options.master_seed = *seed;
      const auto result = krrlab::table1(options, workers);
      krrlab::write_outputs(result.sweep, out_dir, "table1");
      const std::string text = result.format();
      fmt::print("{}", text);
      std::filesystem::create_directories(out_dir);
      std::ofstream(std::filesystem::path(out_dir) / "table1.md") << text;
      return result.all_passed() ? 0 : 1;
    }
    if (*cross) {
      krrlab::CrossoverOptions options;
      options.trials = trials;
      options.c = c;
      options.fast = fast;
      if (seed) options.master_seed = *seed;
      const auto result = krrlab::crossover(options, workers);
      krrlab::write_outputs(result.sweep, out_dir, "crossover");
      const std::string summary = result.summary_csv();
      std::ofstream(std::filesystem::path(out_dir) / "crossover_summary.csv") << summary;
      fmt::print("{}", summary);
      return result.sweep.failed_rows == 0 ? 0 : 1;
    }
    if (*theory && phase.empty()) {
      if (optimal) {
        const auto op = krrlab::optimal_theta(s, beta);
        fmt::print("theta_op: {:.4g}\nrate: {:.4g}\n", op.theta, op.rate);
        return 0;
      }
      const auto noise = noiseless ? krrlab::NoiseModel::none() : krrlab::NoiseModel::decaying(tau);
      print_prediction(krrlab::predict_rates(s, beta, theta, noise));
      return 0;
    }
    if (*theory || *phase_cmd) {
      krrlab::PhaseDiagramSpec spec;
      spec.axis = phase == "tau" ? krrlab::PhaseAxis::noise_exponent : krrlab::PhaseAxis::smoothness;
      if (spec.axis == krrlab::PhaseAxis::noise_exponent) {
        spec.axis_min = 0.0;
        spec.axis_max = 3.0;
      }
      spec.beta = beta;
      spec.s = s;
      spec.resolution = resolution;
      const std::string csv = krrlab::phase_diagram_csv(spec, krrlab::phase_diagram(spec));
      if (*phase_cmd) {
        std::filesystem::create_directories(out_dir);
        const auto path = std::filesystem::path(out_dir) / fmt::format("phase_{}.csv", phase.empty() ? "s" : phase);
        std::ofstream(path) << csv;
        fmt::print("wrote {}\n", path.string());
      } else {
        fmt::print("{}", csv);
      }
      return 0;
    }
    if (*selftest) {
      krrlab::OracleSuiteOptions options;
      options.cells = cells;
      options.draws = draws;
      if (seed) options.seed = *seed;
      bool ok = true;
      for (const auto& cell : krrlab::run_oracle_suite(options)) {
        fmt::print("n={} lambda={:.3g} sigma2={:.3g} {}: z(bias,var,excess)=({:.2f},{:.2f},{:.2f}) residual={:.2g} {}\n",
                   cell.n, cell.lambda, cell.sigma2, cell.target, cell.bias_z, cell.variance_z, cell.excess_z,
                   cell.residual, cell.pass ? "PASS" : "FAIL");
        ok = ok && cell.pass;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
