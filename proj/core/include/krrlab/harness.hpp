#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "krrlab/rate_fit.hpp"
#include "krrlab/risk.hpp"
#include "krrlab/theory.hpp"

namespace krrlab {

/// lambda as a function of n: either c n^{-theta} or exactly zero (kernel
/// interpolation). The two are separate kinds; interpolation is not theta = inf.
class Schedule {
 public:
  static Schedule power_law(double theta, double c);
  static Schedule interpolation();

  bool is_interpolation() const noexcept { return interpolation_; }
  double theta() const noexcept { return theta_; }
  double c() const noexcept { return c_; }
  double lambda(std::size_t n) const;
  /// "theta=0.5" or "lambda=0".
  std::string label() const;

 private:
  Schedule(bool interpolation, double theta, double c) : interpolation_(interpolation), theta_(theta), c_(c) {}
  bool interpolation_;
  double theta_;
  double c_;
};

struct QuadraturePolicy {
  std::size_t min_nodes = kMinQuadratureNodes;
  std::size_t nodes_per_sample = 4;
  std::size_t nodes(std::size_t n) const;
};

/// |empirical - theoretical| bounds on fitted exponents.
struct Tolerances {
  double variance = 0.10;
  double risk = 0.15;
  double bias = 0.30;
  Tolerances scaled(double factor) const { return {variance * factor, risk * factor, bias * factor}; }
};

inline constexpr double kFastToleranceFactor = 1.5;

struct ExperimentConfig {
  std::string experiment = "sweep";
  std::string kernel = "min";
  std::vector<std::string> targets = {"sin2pi"};
  /// Positive entries are theta in lambda = c n^{-theta}; a literal 0 requests lambda = 0.
  std::vector<double> thetas = {0.5};
  double c = 0.005;
  std::vector<double> sigma2s = {0.05};
  std::vector<std::size_t> n_grid;
  std::size_t trials = 100;
  QuadraturePolicy quadrature;
  /// Monte Carlo oracle rows: for trials < oracle_trials, each positive-noise
  /// cell also gets a `monte_carlo` row with `mc_draws` noise draws.
  std::size_t mc_draws = 2000;
  std::size_t oracle_trials = 0;
  std::uint64_t master_seed = 20230601;
  std::string output = "results";
  bool fast = false;
  Tolerances tolerances;

  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_json() const;
  /// FNV-1a of the canonical JSON, excluding the output path.
  std::uint64_t hash() const;
  void validate() const;
  std::vector<Schedule> schedules() const;
};

/// 1000, 1100, ..., 5000.
std::vector<std::size_t> table1_grid();
/// 10..100 step 10, 120..1000 step 20, 1100..5000 step 100.
std::vector<std::size_t> crossover_grid();

struct ResultRow {
  std::string experiment;
  std::string cell;
  std::optional<double> theta;
  double lambda = 0.0;
  double sigma2 = 0.0;
  std::size_t n = 0;
  std::size_t trial = 0;
  double bias2 = 0.0;
  double variance = 0.0;
  double excess = 0.0;
  RiskMethod method = RiskMethod::exact;
  double se = 0.0;
  double residual = 0.0;
  std::string error;
};

struct Check {
  std::string quantity;  ///< "bias", "variance" or "risk"
  double empirical = 0.0;
  double theory = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CurveSummary {
  std::string target;
  double smoothness = 0.0;
  Schedule schedule = Schedule::interpolation();
  double sigma2 = 0.0;
  Curve bias2;
  Curve variance;
  Curve excess;
  std::optional<RateEstimate> bias_fit, variance_fit, risk_fit;
  std::optional<RateEstimate> bias_fit_upper, variance_fit_upper, risk_fit_upper;
  RatePrediction prediction;
  std::vector<Check> checks;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  std::vector<CurveSummary> curves;
  std::size_t failed_rows = 0;
  double max_residual = 0.0;
  bool all_passed() const;
};

/// Runs every (schedule, n, trial) design cell on a pool of `workers` threads.
/// Output depends only on the config (including master_seed).
SweepResult run_sweep(const ExperimentConfig& config, std::size_t workers = 1);

inline constexpr std::string_view kCsvHeader =
    "experiment,cell,theta,lambda,sigma2,n,trial,bias2,variance,excess,method,se";

std::string rows_csv(const SweepResult& result);
std::string metadata_json(const SweepResult& result);
/// Writes <dir>/<stem>.csv and <dir>/<stem>.json.
void write_outputs(const SweepResult& result, const std::filesystem::path& dir, std::string_view stem);

// ---------------------------------------------------------------------------
// Rate table over theta x target.

struct Table1Options {
  std::size_t trials = 100;
  double c = 0.005;
  double sigma2 = 0.05;
  bool fast = false;
  std::uint64_t master_seed = 20230601;
  std::vector<double> thetas = {0.2, 0.4, 0.5, 1.0, 2.0, 3.0};
  std::vector<std::string> targets = {"cos2pi", "sin2pi", "sin3pi2"};
};

struct Table1Cell {
  double empirical = 0.0;
  std::optional<double> theory;
  /// The theoretical value is min(s,2) beta for s <= 1, where no bound is proven.
  bool conjectured = false;
  bool best_in_column = false;
  bool pass = true;
};

struct Table1Row {
  double theta = 0.0;
  Table1Cell variance;
  std::vector<Table1Cell> bias;  ///< per target
  std::vector<Table1Cell> risk;  ///< per target
};

struct Table1 {
  std::vector<std::string> targets;
  std::vector<double> smoothness;
  std::vector<Table1Row> rows;
  Tolerances tolerances;
  SweepResult sweep;
  bool all_passed() const;
  /// Markdown table, "empirical (theoretical)" per cell, best risk per column in bold.
  std::string format() const;
};

ExperimentConfig table1_config(const Table1Options& options);
Table1 table1(const Table1Options& options, std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Noise crossover.

struct CrossoverOptions {
  std::size_t trials = 100;
  double c = 0.005;
  bool fast = false;
  std::uint64_t master_seed = 20230601;
  /// Includes 0 and at least two positive values.
  std::vector<double> sigma2s = {0.0, 1e-4, 1e-2, 0.05, 1.0};
  std::vector<double> thetas = {1.0, 2.0};
  bool include_interpolation = true;
  std::vector<std::string> targets = {"cos2pi", "sin2pi", "sin3pi2"};
  double upper_window_start = 1000.0;
};

struct CrossoverCurve {
  std::string target;
  Schedule schedule = Schedule::interpolation();
  double sigma2 = 0.0;
  Curve excess;
  std::optional<RateEstimate> upper_fit;
  /// Slope overlays: noisy risk exponent and noiseless exponent, when determined.
  std::optional<double> noisy_slope;
  std::optional<double> noiseless_slope;
  /// Smallest grid n at which the mean variance reaches the mean bias^2.
  std::optional<double> crossover_n;
};

struct CrossoverResult {
  std::vector<CrossoverCurve> curves;
  SweepResult sweep;
  std::string summary_csv() const;
};

ExperimentConfig crossover_config(const CrossoverOptions& options);
CrossoverResult crossover(const CrossoverOptions& options, std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Exact-vs-Monte-Carlo equivalence on random small cells.

struct OracleCell {
  std::size_t n = 0;
  double lambda = 0.0;
  double sigma2 = 0.0;
  std::string target;
  RiskBreakdown exact;
  RiskBreakdown monte_carlo;
  double bias_z = 0.0;
  double variance_z = 0.0;
  double excess_z = 0.0;
  double identity_gap = 0.0;
  double residual = 0.0;
  bool pass = false;
};

struct OracleSuiteOptions {
  std::size_t cells = 20;
  std::size_t max_n = 200;
  std::size_t draws = 2000;
  double z_bound = 3.0;
  std::uint64_t seed = 7;
};

/// Exact values from the structured route against a Monte Carlo oracle run on
/// the dense Cholesky route.
std::vector<OracleCell> run_oracle_suite(const OracleSuiteOptions& options);

}  // namespace krrlab
