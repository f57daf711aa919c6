#include "krrlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "krrlab/errors.hpp"
#include "krrlab/random.hpp"

#ifndef KRRLAB_VERSION
#define KRRLAB_VERSION "0.0.0"
#endif

namespace krrlab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kResidualBound = 1e-10;

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Every index is
/// written by exactly one call, so results never depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> arithmetic(std::size_t start, std::size_t stop, std::size_t step) {
  std::vector<std::size_t> out;
  for (std::size_t n = start; n <= stop; n += step) out.push_back(n);
  return out;
}

ExperimentConfig apply_fast(ExperimentConfig config) {
  if (!config.fast) return config;
  config.trials = std::min<std::size_t>(config.trials, 20);
  std::erase_if(config.n_grid, [](std::size_t n) { return n > 3000; });
  config.tolerances = config.tolerances.scaled(kFastToleranceFactor);
  return config;
}

json fit_json(const std::optional<RateEstimate>& fit) {
  if (!fit) return nullptr;
  return {{"exponent", fit->exponent},
          {"intercept", fit->intercept},
          {"rms_residual", fit->rms_residual},
          {"n_points", fit->n_points},
          {"excluded", fit->excluded},
          {"window", {fit->window.n_min, std::isinf(fit->window.n_max) ? json(nullptr) : json(fit->window.n_max)}}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<RateEstimate> try_fit(const Curve& curve, FitWindow window) {
  try {
    return fit_rate(curve, window);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

RatePrediction prediction_for(double s, double beta, const Schedule& schedule, double sigma2) {
  // lambda = 0 behaves as the theta >= beta branch for every theta >= beta.
  const double theta = schedule.is_interpolation() ? beta : schedule.theta();
  return predict_rates(s, beta, theta, sigma2 > 0.0 ? NoiseModel::constant() : NoiseModel::none());
}

}  // namespace

// ---------------------------------------------------------------------------

Schedule Schedule::power_law(double theta, double c) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError(fmt::format("theta must be positive, got {}", theta));
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError(fmt::format("c must be positive, got {}", c));
  return Schedule(false, theta, c);
}

Schedule Schedule::interpolation() { return Schedule(true, 0.0, 0.0); }

double Schedule::lambda(std::size_t n) const {
  if (interpolation_) return 0.0;
  return c_ * std::pow(static_cast<double>(n), -theta_);
}

std::string Schedule::label() const {
  return interpolation_ ? std::string("lambda=0") : fmt::format("theta={}", theta_);
}

std::size_t QuadraturePolicy::nodes(std::size_t n) const {
  std::size_t count = std::max(min_nodes, nodes_per_sample * n + 1);
  if (count % 2 == 0) ++count;
  return count;
}

std::vector<std::size_t> table1_grid() { return arithmetic(1000, 5000, 100); }

std::vector<std::size_t> crossover_grid() {
  auto grid = arithmetic(10, 100, 10);
  for (auto n : arithmetic(120, 1000, 20)) grid.push_back(n);
  for (auto n : arithmetic(1100, 5000, 100)) grid.push_back(n);
  return grid;
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::vector<std::size_t> parse_grid(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "table1") return table1_grid();
    if (name == "crossover") return crossover_grid();
    throw DomainError(fmt::format("unknown n_grid preset '{}'", name));
  }
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  if (j.is_object()) {
    const auto start = j.at("start").get<std::size_t>();
    const auto stop = j.at("stop").get<std::size_t>();
    const auto step = j.at("step").get<std::size_t>();
    if (step == 0) throw DomainError("n_grid step must be positive");
    return arithmetic(start, stop, step);
  }
  throw DomainError("n_grid must be a list, a {start, stop, step} object or a preset name");
}

json config_json(const ExperimentConfig& c, bool with_output) {
  json j = {{"experiment", c.experiment},
            {"kernel", c.kernel},
            {"targets", c.targets},
            {"theta_list", c.thetas},
            {"c", c.c},
            {"sigma2_list", c.sigma2s},
            {"n_grid", c.n_grid},
            {"trials", c.trials},
            {"quadrature", {{"min_nodes", c.quadrature.min_nodes}, {"nodes_per_sample", c.quadrature.nodes_per_sample}}},
            {"mc_draws", c.mc_draws},
            {"oracle_trials", c.oracle_trials},
            {"master_seed", c.master_seed},
            {"fast", c.fast},
            {"tolerances",
             {{"variance", c.tolerances.variance}, {"risk", c.tolerances.risk}, {"bias", c.tolerances.bias}}}};
  if (with_output) j["output"] = c.output;
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.experiment = j["experiment"].get<std::string>();
    if (j.contains("kernel")) c.kernel = j["kernel"].get<std::string>();
    if (j.contains("target")) c.targets = {j["target"].get<std::string>()};
    if (j.contains("targets")) c.targets = j["targets"].get<std::vector<std::string>>();
    if (j.contains("theta_list")) c.thetas = j["theta_list"].get<std::vector<double>>();
    if (j.contains("c")) c.c = j["c"].get<double>();
    if (j.contains("sigma2_list")) c.sigma2s = j["sigma2_list"].get<std::vector<double>>();
    c.n_grid = j.contains("n_grid") ? parse_grid(j["n_grid"]) : table1_grid();
    if (j.contains("trials")) c.trials = j["trials"].get<std::size_t>();
    if (j.contains("quadrature")) {
      const auto& q = j["quadrature"];
      if (q.contains("min_nodes")) c.quadrature.min_nodes = q["min_nodes"].get<std::size_t>();
      if (q.contains("nodes_per_sample")) c.quadrature.nodes_per_sample = q["nodes_per_sample"].get<std::size_t>();
    }
    if (j.contains("mc_draws")) c.mc_draws = j["mc_draws"].get<std::size_t>();
    if (j.contains("oracle_trials")) c.oracle_trials = j["oracle_trials"].get<std::size_t>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    if (j.contains("fast")) c.fast = j["fast"].get<bool>();
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      if (t.contains("variance")) c.tolerances.variance = t["variance"].get<double>();
      if (t.contains("risk")) c.tolerances.risk = t["risk"].get<double>();
      if (t.contains("bias")) c.tolerances.bias = t["bias"].get<double>();
    }
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("bad config field: {}", e.what()));
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string ExperimentConfig::to_json() const { return config_json(*this, true).dump(2); }

std::uint64_t ExperimentConfig::hash() const { return fnv1a(config_json(*this, false).dump()); }

void ExperimentConfig::validate() const {
  if (targets.empty()) throw DomainError("config needs at least one target");
  if (thetas.empty()) throw DomainError("theta_list must not be empty");
  for (double t : thetas) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError(fmt::format("theta entries must be > 0 or 0, got {}", t));
  }
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("c must be positive");
  if (sigma2s.empty()) throw DomainError("sigma2_list must not be empty");
  for (double s : sigma2s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError(fmt::format("sigma2 must be >= 0, got {}", s));
  }
  if (n_grid.empty()) throw DomainError("n_grid must not be empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] == 0) throw DomainError("n_grid entries must be >= 1");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw DomainError("n_grid must be strictly increasing");
  }
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (quadrature.nodes_per_sample < 4) throw DomainError("quadrature.nodes_per_sample must be >= 4");
  if (quadrature.min_nodes < 3) throw DomainError("quadrature.min_nodes must be >= 3");
  if (oracle_trials > 0 && mc_draws < 2) throw DomainError("mc_draws must be >= 2 for oracle rows");
  for (double tol : {tolerances.variance, tolerances.risk, tolerances.bias}) {
    if (!(tol > 0.0)) throw DomainError("tolerances must be positive");
  }
}

std::vector<Schedule> ExperimentConfig::schedules() const {
  std::vector<Schedule> out;
  for (double t : thetas) out.push_back(t == 0.0 ? Schedule::interpolation() : Schedule::power_law(t, c));
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

bool SweepResult::all_passed() const {
  if (failed_rows > 0 || !(max_residual <= kResidualBound)) return false;
  for (const auto& curve : curves) {
    for (const auto& check : curve.checks) {
      if (!check.pass) return false;
    }
  }
  return true;
}

SweepResult run_sweep(const ExperimentConfig& input, std::size_t workers) {
  input.validate();
  const ExperimentConfig config = apply_fast(input);

  const KernelSpec kernel = parse_kernel(config.kernel);
  const auto eigensystem = kernel.eigensystem_ptr();
  std::vector<Target> targets;
  for (const auto& name : config.targets) targets.push_back(parse_target(name, eigensystem));
  const auto schedules = config.schedules();
  const std::size_t n_targets = targets.size();
  const std::size_t n_sigma = config.sigma2s.size();
  const std::size_t n_grid = config.n_grid.size();
  const std::size_t trials = config.trials;
  const bool any_noise = std::any_of(config.sigma2s.begin(), config.sigma2s.end(), [](double s) { return s > 0.0; });

  // Quadrature rules, one per distinct node count.
  std::vector<std::size_t> node_counts;
  for (auto n : config.n_grid) node_counts.push_back(config.quadrature.nodes(n));
  std::sort(node_counts.begin(), node_counts.end());
  node_counts.erase(std::unique(node_counts.begin(), node_counts.end()), node_counts.end());
  std::vector<QuadratureRule> rules;
  for (auto count : node_counts) rules.push_back(QuadratureRule::simpson(count));
  auto node_index = [&](std::size_t n) {
    return static_cast<std::size_t>(std::lower_bound(node_counts.begin(), node_counts.end(),
                                                     config.quadrature.nodes(n)) - node_counts.begin());
  };

  // One task per (schedule, n, trial). The design depends on (n, trial) only, so
  // schedules, targets and noise levels are compared on paired samples.
  struct TaskOut {
    std::vector<double> bias2;  // per target
    double unit_variance = kNaN;
    double residual = 0.0;
    std::vector<RiskBreakdown> mc;  // per (target, sigma2), empty when not requested
    std::string error;
  };
  const std::size_t n_tasks = schedules.size() * n_grid * trials;
  std::vector<TaskOut> outs(n_tasks);
  parallel_for(n_tasks, workers, [&](std::size_t task) {
    const std::size_t t = task % trials;
    const std::size_t k = (task / trials) % n_grid;
    const std::size_t si = task / (trials * n_grid);
    const Schedule& schedule = schedules[si];
    const std::size_t n = config.n_grid[k];
    const QuadratureRule& rule = rules[node_index(n)];
    auto& out = outs[task];
    try {
      const std::string key = fmt::format("{}|n={}", kernel.name(), n);
      const std::uint64_t seed = derive_seed(config.master_seed, key, t);
      const Design design = sample_design(n, 0.0, seed);
      const double lambda = schedule.lambda(n);
      const RidgeSystem system(kernel, design, lambda);
      out.unit_variance = any_noise ? system.variance_integral(rule) : 0.0;
      for (std::size_t ti = 0; ti < n_targets; ++ti) {
        const auto at_design = targets[ti].evaluate(design.points());
        double residual = 0.0;
        out.bias2.push_back(bias_squared(system, targets[ti], at_design, rule, &residual));
        out.residual = std::max(out.residual, residual);
      }
      if (t < config.oracle_trials) {
        for (std::size_t ti = 0; ti < n_targets; ++ti) {
          for (std::size_t vi = 0; vi < n_sigma; ++vi) {
            const double s2 = config.sigma2s[vi];
            if (s2 == 0.0) {
              out.mc.emplace_back();
              continue;
            }
            const Design noisy(std::vector<double>(design.points().begin(), design.points().end()), s2, seed);
            out.mc.push_back(monte_carlo_risk(kernel, noisy, targets[ti], lambda, s2, config.mc_draws, rule,
                                              substream(seed, 1)));
          }
        }
      }
    } catch (const std::exception& e) {
      out.error = e.what();
      out.bias2.assign(n_targets, kNaN);
      out.mc.clear();
    }
  });

  SweepResult result;
  result.config = config;
  const double beta = eigensystem->decay_beta();
  const Tolerances& tol = config.tolerances;

  for (std::size_t ti = 0; ti < n_targets; ++ti) {
    for (std::size_t si = 0; si < schedules.size(); ++si) {
      const Schedule& schedule = schedules[si];
      for (std::size_t vi = 0; vi < n_sigma; ++vi) {
        const double s2 = config.sigma2s[vi];
        CurveSummary curve;
        curve.target = config.targets[ti];
        curve.smoothness = targets[ti].nominal_smoothness();
        curve.schedule = schedule;
        curve.sigma2 = s2;
        for (std::size_t k = 0; k < n_grid; ++k) {
          const std::size_t n = config.n_grid[k];
          const double lambda = schedule.lambda(n);
          const std::string cell = fmt::format("{}|{}|sigma2={}|n={}", config.targets[ti], schedule.label(), s2, n);
          std::vector<double> b, v, e;
          for (std::size_t t = 0; t < trials; ++t) {
            const auto& out = outs[(si * n_grid + k) * trials + t];
            ResultRow row;
            row.experiment = config.experiment;
            row.cell = cell;
            if (!schedule.is_interpolation()) row.theta = schedule.theta();
            row.lambda = lambda;
            row.sigma2 = s2;
            row.n = n;
            row.trial = t;
            row.residual = out.residual;
            if (!out.error.empty()) {
              row.bias2 = row.variance = row.excess = kNaN;
              row.error = out.error;
              ++result.failed_rows;
              result.rows.push_back(std::move(row));
              continue;
            }
            const RiskBreakdown rb = combine(out.bias2[ti], out.unit_variance, s2, n, lambda);
            row.bias2 = rb.bias2;
            row.variance = rb.variance;
            row.excess = rb.excess;
            result.max_residual = std::max(result.max_residual, out.residual);
            b.push_back(rb.bias2);
            v.push_back(rb.variance);
            e.push_back(rb.excess);
            result.rows.push_back(row);
            if (!out.mc.empty() && s2 > 0.0) {
              const RiskBreakdown& mc = out.mc[ti * n_sigma + vi];
              ResultRow mrow = row;
              mrow.bias2 = mc.bias2;
              mrow.variance = mc.variance;
              mrow.excess = mc.excess;
              mrow.method = RiskMethod::monte_carlo;
              mrow.se = mc.excess_se;
              result.rows.push_back(std::move(mrow));
            }
          }
          if (b.empty()) continue;
          const double nn = static_cast<double>(n);
          const auto point = [nn](const std::vector<double>& xs) {
            const double grid[] = {nn};
            std::vector<std::vector<double>> per_trial;
            for (double x : xs) per_trial.push_back({x});
            return aggregate_trials(grid, per_trial).front();
          };
          curve.bias2.push_back(point(b));
          curve.variance.push_back(point(v));
          curve.excess.push_back(point(e));
        }

        curve.bias_fit = try_fit(curve.bias2, FitWindow::all());
        curve.bias_fit_upper = try_fit(curve.bias2, FitWindow::upper_half(curve.bias2));
        if (s2 > 0.0) {
          curve.variance_fit = try_fit(curve.variance, FitWindow::all());
          curve.variance_fit_upper = try_fit(curve.variance, FitWindow::upper_half(curve.variance));
        }
        curve.risk_fit = try_fit(curve.excess, FitWindow::all());
        curve.risk_fit_upper = try_fit(curve.excess, FitWindow::upper_half(curve.excess));
        curve.prediction = prediction_for(curve.smoothness, beta, schedule, s2);

        const auto add_check = [&](std::string quantity, const std::optional<RateEstimate>& fit,
                                   const std::optional<double>& theory, double tolerance) {
          if (!fit || !theory) return;
          Check c;
          c.quantity = std::move(quantity);
          c.empirical = fit->exponent;
          c.theory = *theory;
          c.tolerance = tolerance;
          c.pass = std::abs(c.empirical - c.theory) <= tolerance;
          curve.checks.push_back(c);
        };
        add_check("variance", curve.variance_fit, curve.prediction.variance_exponent, tol.variance);
        add_check("bias", curve.bias_fit, curve.prediction.bias_exponent, tol.bias);
        add_check("risk", curve.risk_fit, curve.prediction.risk_exponent, tol.risk);
        result.curves.push_back(std::move(curve));
      }
    }
  }
  return result;
}

std::string rows_csv(const SweepResult& result) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : result.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.experiment, r.cell,
                       r.theta ? num(*r.theta) : std::string(), num(r.lambda), num(r.sigma2), r.n, r.trial,
                       num(r.bias2), num(r.variance), num(r.excess), to_string(r.method), num(r.se));
  }
  return out;
}

std::string metadata_json(const SweepResult& result) {
  json j;
  j["version"] = KRRLAB_VERSION;
  j["config"] = config_json(result.config, true);
  j["config_hash"] = fmt::format("{:016x}", result.config.hash());
  j["master_seed"] = result.config.master_seed;
  j["notes"] = {
      {"fit", "log-log least squares on the trial-mean curve (not the mean of per-trial exponents)"},
      {"noise", "sigma2 is the noise variance"},
      {"designs", "one design per (n, trial), shared across schedules, targets and noise levels"},
      {"interpolation", "lambda=0 rows have an empty theta; their prediction uses the theta >= beta branch"},
      {"quadrature", "composite Simpson between consecutive design points at the configured node density; "
                     "min-kernel variance integrated in closed form"},
  };
  if (result.config.experiment == "crossover") {
    j["notes"]["sigma2_list"] = "the crossover noise levels are our own choice";
  }
  j["failed_rows"] = result.failed_rows;
  j["max_residual"] = result.max_residual;
  j["residual_bound"] = kResidualBound;
  j["all_passed"] = result.all_passed();

  json failures = json::array();
  for (const auto& r : result.rows) {
    if (!r.error.empty()) failures.push_back({{"cell", r.cell}, {"trial", r.trial}, {"error", r.error}});
  }
  j["failures"] = failures;

  json curves = json::array();
  for (const auto& c : result.curves) {
    const auto& p = c.prediction;
    json pred = {{"bias_exponent", optional_json(p.bias_exponent)},
                 {"variance_exponent", optional_json(p.variance_exponent)},
                 {"risk_exponent", optional_json(p.risk_exponent)},
                 {"regime", to_string(p.regime)},
                 {"floor", p.floor == NoiseFloor::constant_sigma2 ? "constant_sigma2" : "none"},
                 {"log_factor", p.log_factor},
                 {"on_boundary", p.on_boundary},
                 {"upper_bound", p.upper_bound},
                 {"not_covered", p.not_covered},
                 {"conjectured_bias_exponent", optional_json(p.conjectured_bias_exponent)},
                 {"minimax_lower_exponent", optional_json(p.minimax_lower_exponent)}};
    json checks = json::array();
    for (const auto& k : c.checks) {
      checks.push_back({{"quantity", k.quantity},
                        {"empirical", k.empirical},
                        {"theory", k.theory},
                        {"tolerance", k.tolerance},
                        {"pass", k.pass}});
    }
    const auto curve_json = [](const Curve& curve) {
      json a = json::array();
      for (const auto& pt : curve) a.push_back({pt.n, pt.value, pt.std});
      return a;
    };
    curves.push_back({{"target", c.target},
                      {"smoothness", std::isinf(c.smoothness) ? json("inf") : json(c.smoothness)},
                      {"schedule", c.schedule.label()},
                      {"sigma2", c.sigma2},
                      {"fits",
                       {{"bias", fit_json(c.bias_fit)},
                        {"variance", fit_json(c.variance_fit)},
                        {"risk", fit_json(c.risk_fit)},
                        {"bias_upper_half", fit_json(c.bias_fit_upper)},
                        {"variance_upper_half", fit_json(c.variance_fit_upper)},
                        {"risk_upper_half", fit_json(c.risk_fit_upper)}}},
                      {"prediction", pred},
                      {"checks", checks},
                      {"mean_curves",
                       {{"columns", {"n", "mean", "std"}},
                        {"bias2", curve_json(c.bias2)},
                        {"variance", curve_json(c.variance)},
                        {"excess", curve_json(c.excess)}}}});
  }
  j["curves"] = curves;
  return j.dump(2);
}

void write_outputs(const SweepResult& result, const std::filesystem::path& dir, std::string_view stem) {
  std::filesystem::create_directories(dir);
  const auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError(fmt::format("cannot write '{}'", path.string()));
    out << text;
  };
  write(dir / fmt::format("{}.csv", stem), rows_csv(result));
  write(dir / fmt::format("{}.json", stem), metadata_json(result));
}

// ---------------------------------------------------------------------------
// Table

ExperimentConfig table1_config(const Table1Options& options) {
  ExperimentConfig c;
  c.experiment = "table1";
  c.targets = options.targets;
  c.thetas = options.thetas;
  c.c = options.c;
  c.sigma2s = {options.sigma2};
  c.n_grid = table1_grid();
  c.trials = options.trials;
  c.master_seed = options.master_seed;
  c.fast = options.fast;
  c.output = "table1";
  return c;
}

bool Table1::all_passed() const {
  for (const auto& row : rows) {
    if (!row.variance.pass) return false;
    for (const auto& cell : row.bias) {
      if (!cell.pass) return false;
    }
    for (const auto& cell : row.risk) {
      if (!cell.pass) return false;
    }
  }
  return sweep.failed_rows == 0 && sweep.max_residual <= kResidualBound;
}

Table1 table1(const Table1Options& options, std::size_t workers) {
  if (options.sigma2 <= 0.0) throw DomainError("table1 needs a positive noise variance");
  Table1 table;
  table.sweep = run_sweep(table1_config(options), workers);
  table.targets = options.targets;
  table.tolerances = table.sweep.config.tolerances;
  const auto& tol = table.tolerances;

  const auto find = [&](const std::string& target, double theta) -> const CurveSummary& {
    for (const auto& c : table.sweep.curves) {
      if (c.target == target && !c.schedule.is_interpolation() && c.schedule.theta() == theta) return c;
    }
    throw DomainError(fmt::format("missing curve for {} at theta={}", target, theta));
  };
  const auto cell = [](const std::optional<RateEstimate>& fit, std::optional<double> theory, double tolerance) {
    Table1Cell c;
    c.empirical = fit ? fit->exponent : kNaN;
    c.theory = theory;
    c.pass = fit && theory && std::abs(c.empirical - *theory) <= tolerance;
    return c;
  };

  for (const auto& target : options.targets) table.smoothness.push_back(find(target, options.thetas.front()).smoothness);
  for (double theta : options.thetas) {
    Table1Row row;
    row.theta = theta;
    const auto& first = find(options.targets.front(), theta);
    row.variance = cell(first.variance_fit, first.prediction.variance_exponent, tol.variance);
    for (const auto& target : options.targets) {
      const auto& c = find(target, theta);
      const auto& p = c.prediction;
      Table1Cell bias = cell(c.bias_fit, p.bias_exponent ? p.bias_exponent : p.conjectured_bias_exponent, tol.bias);
      bias.conjectured = !p.bias_exponent.has_value() && p.conjectured_bias_exponent.has_value();
      row.bias.push_back(bias);
      row.risk.push_back(cell(c.risk_fit, p.risk_exponent, tol.risk));
    }
    table.rows.push_back(std::move(row));
  }
  for (std::size_t ti = 0; ti < options.targets.size(); ++ti) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
      if (table.rows[r].risk[ti].empirical > table.rows[best].risk[ti].empirical) best = r;
    }
    table.rows[best].risk[ti].best_in_column = true;
  }
  return table;
}

std::string Table1::format() const {
  const auto show = [](const Table1Cell& c) {
    std::string text = fmt::format("{:.2f} ({})", c.empirical, c.theory ? fmt::format("{:.2f}", *c.theory) : "-");
    if (c.conjectured) text += "*";
    if (c.best_in_column) text = "**" + text + "**";
    if (!c.pass) text += " FAIL";
    return text;
  };
  std::string out = "| theta | variance |";
  for (const auto& t : targets) out += fmt::format(" bias {} |", t);
  for (const auto& t : targets) out += fmt::format(" risk {} |", t);
  out += "\n|---|---|";
  for (std::size_t k = 0; k < 2 * targets.size(); ++k) out += "---|";
  out += '\n';
  for (const auto& row : rows) {
    out += fmt::format("| {:.1f} | {} |", row.theta, show(row.variance));
    for (const auto& c : row.bias) out += fmt::format(" {} |", show(c));
    for (const auto& c : row.risk) out += fmt::format(" {} |", show(c));
    out += '\n';
  }
  out += "\nCells: fitted exponent (theoretical exponent). Bold: best risk rate in the column.\n";
  out += "*: no bias bound is proven for s <= 1 at theta >= beta; min(s,2) beta is shown.\n";
  out += fmt::format("Tolerances: variance {:.3g}, bias {:.3g}, risk {:.3g}.\n", tolerances.variance,
                     tolerances.bias, tolerances.risk);
  return out;
}

// ---------------------------------------------------------------------------
// Crossover

ExperimentConfig crossover_config(const CrossoverOptions& options) {
  std::size_t positive = 0;
  bool has_zero = false;
  for (double s : options.sigma2s) {
    if (s > 0.0) ++positive;
    if (s == 0.0) has_zero = true;
  }
  if (!has_zero || positive < 2) throw DomainError("crossover needs sigma2 = 0 and at least two positive levels");
  ExperimentConfig c;
  c.experiment = "crossover";
  c.targets = options.targets;
  c.thetas = options.thetas;
  if (options.include_interpolation) c.thetas.push_back(0.0);
  c.c = options.c;
  c.sigma2s = options.sigma2s;
  c.n_grid = crossover_grid();
  c.trials = options.trials;
  c.master_seed = options.master_seed;
  c.fast = options.fast;
  c.output = "crossover";
  return c;
}

CrossoverResult crossover(const CrossoverOptions& options, std::size_t workers) {
  CrossoverResult out;
  out.sweep = run_sweep(crossover_config(options), workers);
  const KernelSpec kernel = parse_kernel(out.sweep.config.kernel);
  const double beta = kernel.eigensystem().decay_beta();
  double top = 0.0;
  for (auto n : out.sweep.config.n_grid) top = std::max(top, static_cast<double>(n));
  const FitWindow upper{options.upper_window_start, top};

  for (const auto& c : out.sweep.curves) {
    CrossoverCurve cc;
    cc.target = c.target;
    cc.schedule = c.schedule;
    cc.sigma2 = c.sigma2;
    cc.excess = c.excess;
    cc.upper_fit = try_fit(c.excess, upper);
    cc.noisy_slope = prediction_for(c.smoothness, beta, c.schedule, 1.0).risk_exponent;
    cc.noiseless_slope = prediction_for(c.smoothness, beta, c.schedule, 0.0).risk_exponent;
    if (c.sigma2 > 0.0) {
      for (std::size_t k = 0; k < c.variance.size(); ++k) {
        if (c.variance[k].value >= c.bias2[k].value) {
          cc.crossover_n = c.variance[k].n;
          break;
        }
      }
    }
    out.curves.push_back(std::move(cc));
  }
  return out;
}

std::string CrossoverResult::summary_csv() const {
  std::string out = "target,schedule,sigma2,crossover_n,upper_window_exponent,noisy_slope,noiseless_slope\n";
  const auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  for (const auto& c : curves) {
    out += fmt::format("{},{},{},{},{},{},{}\n", c.target, c.schedule.label(), num(c.sigma2), opt(c.crossover_n),
                       c.upper_fit ? num(c.upper_fit->exponent) : std::string(), opt(c.noisy_slope),
                       opt(c.noiseless_slope));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle suite

std::vector<OracleCell> run_oracle_suite(const OracleSuiteOptions& options) {
  if (options.max_n < 20) throw DomainError("oracle suite needs max_n >= 20");
  if (options.draws < 2) throw DomainError("oracle suite needs at least two draws");
  const KernelSpec kernel = KernelSpec::min_kernel();
  const std::vector<std::string> names = {"cos2pi", "sin2pi", "sin3pi2"};
  std::vector<Target> targets;
  for (const auto& name : names) targets.push_back(named_target(name, kernel.eigensystem_ptr()));

  Engine engine = make_engine(options.seed);
  std::uniform_int_distribution<std::size_t> size_dist(20, options.max_n);
  std::uniform_real_distribution<double> log_lambda(std::log(1e-5), std::log(1e-1));
  std::uniform_real_distribution<double> log_sigma2(std::log(1e-3), std::log(1.0));

  std::vector<OracleCell> cells;
  for (std::size_t i = 0; i < options.cells; ++i) {
    OracleCell cell;
    cell.n = size_dist(engine);
    cell.lambda = std::exp(log_lambda(engine));
    cell.sigma2 = std::exp(log_sigma2(engine));
    const Target& target = targets[i % targets.size()];
    cell.target = target.name();

    const std::uint64_t seed = derive_seed(options.seed, "oracle", i);
    const Design design = sample_design(cell.n, cell.sigma2, seed);
    const auto rule = QuadratureRule::simpson(default_node_count(cell.n));
    cell.exact = excess_risk(kernel, design, target, cell.lambda, cell.sigma2, rule, SolverRoute::structured);
    cell.monte_carlo = monte_carlo_risk(kernel, design, target, cell.lambda, cell.sigma2, options.draws, rule,
                                        substream(seed, 1), SolverRoute::dense);
    const auto z = [](double exact, double mc, double se) {
      if (se > 0.0) return std::abs(exact - mc) / se;
      return exact == mc ? 0.0 : std::numeric_limits<double>::infinity();
    };
    cell.bias_z = z(cell.exact.bias2, cell.monte_carlo.bias2, cell.monte_carlo.bias2_se);
    cell.variance_z = z(cell.exact.variance, cell.monte_carlo.variance, cell.monte_carlo.variance_se);
    cell.excess_z = z(cell.exact.excess, cell.monte_carlo.excess, cell.monte_carlo.excess_se);
    cell.identity_gap = std::abs(cell.exact.excess - (cell.exact.bias2 + cell.exact.variance));
    cell.residual = conditional_mean_solution(kernel, design, target, cell.lambda, SolverRoute::structured)
                        .reproduction_residual();
    cell.pass = cell.bias_z <= options.z_bound && cell.variance_z <= options.z_bound &&
                cell.excess_z <= options.z_bound && cell.identity_gap <= 1e-12 && cell.residual <= kResidualBound;
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace krrlab
