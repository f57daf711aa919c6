#include "krrlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "krrlab/errors.hpp"
#include "krrlab/quadrature.hpp"

namespace krrlab {

namespace {

constexpr double kTie = 1e-12;

void check_rate_domain(double s, double beta) {
  if (!(s > 0.0)) throw DomainError(fmt::format("smoothness s must be positive, got {}", s));
  if (!(beta > 1.0) || !std::isfinite(beta)) throw DomainError(fmt::format("beta must exceed 1, got {}", beta));
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.6g}", v);
}

}  // namespace

std::string_view to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::underfitting:
      return "underfitting";
    case Regime::overfitting:
      return "overfitting";
    case Regime::interpolating:
      return "interpolating";
    case Regime::noiseless:
      return "noiseless";
  }
  return "?";
}

std::string_view to_string(ApproximationCase c) noexcept {
  switch (c) {
    case ApproximationCase::power:
      return "lambda^(s-gamma)";
    case ApproximationCase::log_corrected:
      return "lambda^2 ln(1/lambda)";
    case ApproximationCase::saturated:
      return "lambda^2";
  }
  return "?";
}

RatePrediction predict_rates(double s, double beta, double theta, NoiseModel noise) {
  check_rate_domain(s, beta);
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError(fmt::format("theta must be positive, got {}", theta));
  if (noise.noisy && !(noise.tau >= 0.0)) throw DomainError(fmt::format("tau must be >= 0, got {}", noise.tau));

  const double st = std::min(s, 2.0);
  RatePrediction p;
  p.log_factor = (s == 2.0);

  if (theta < beta) {
    const double bias = st * theta;
    p.bias_exponent = bias;
    if (!noise.noisy) {
      p.regime = Regime::noiseless;
      p.risk_exponent = bias;
      return p;
    }
    const double variance = noise.tau + 1.0 - theta / beta;
    p.variance_exponent = variance;
    p.risk_exponent = std::min(bias, variance);
    p.on_boundary = std::abs(bias - variance) <= kTie;
    // The slower-decaying term dominates the risk.
    p.regime = bias <= variance ? Regime::underfitting : Regime::overfitting;
    return p;
  }

  // theta >= beta: the bias is only bounded above, and only for s > 1.
  if (s > 1.0) {
    p.bias_exponent = st * beta;
    p.upper_bound = true;
  } else {
    p.not_covered = true;
    p.conjectured_bias_exponent = st * beta;
  }
  if (noise.noisy) {
    p.regime = Regime::interpolating;
    p.floor = NoiseFloor::constant_sigma2;
    p.variance_exponent = noise.tau;
    p.risk_exponent = noise.tau;
    return p;
  }
  p.regime = Regime::noiseless;
  if (s > 1.0) {
    p.risk_exponent = st * beta;
    p.minimax_lower_exponent = s * beta;
  }
  return p;
}

OptimalRegularization optimal_theta(double s, double beta) {
  check_rate_domain(s, beta);
  const double st = std::min(s, 2.0);
  return {beta / (st * beta + 1.0), st * beta / (st * beta + 1.0)};
}

ApproximationLaw approximation_error_law(double s, double gamma, std::span<const double> lambdas) {
  if (!(gamma >= 0.0) || !(gamma < s)) {
    throw DomainError(fmt::format("approximation law needs 0 <= gamma < s, got gamma={}, s={}", gamma, s));
  }
  const double gap = s - gamma;
  ApproximationLaw law;
  if (std::abs(gap - 2.0) <= kTie) {
    law.kind = ApproximationCase::log_corrected;
  } else {
    law.kind = gap < 2.0 ? ApproximationCase::power : ApproximationCase::saturated;
  }
  law.predicted.reserve(lambdas.size());
  for (double l : lambdas) {
    if (!(l > 0.0 && l < 1.0)) throw DomainError(fmt::format("lambda must lie in (0,1), got {}", l));
    switch (law.kind) {
      case ApproximationCase::power:
        law.predicted.push_back(std::pow(l, gap));
        break;
      case ApproximationCase::log_corrected:
        law.predicted.push_back(l * l * std::log(1.0 / l));
        break;
      case ApproximationCase::saturated:
        law.predicted.push_back(l * l);
        break;
    }
  }
  return law;
}

namespace {

/// Integral of term(lambda(x), x) over x in [M + 1/2, inf), with the spectrum
/// continued as lambda(x) = lambda_M (x / M)^{-b}, b fitted on the last octave.
/// Integrated in u = ln x by Simpson; `decay` is the asymptotic decay rate in u
/// of the integrand, used to place the cut-off.
template <typename Term>
double tail_integral(std::span<const double> eigenvalues, double lambda, double decay, Term term) {
  const std::size_t m = eigenvalues.size();
  if (m < 4 || !(decay > 0.0)) return 0.0;
  const double last = eigenvalues[m - 1];
  const double mid = eigenvalues[m / 2 - 1];
  const double b = std::log(mid / last) / std::log(static_cast<double>(m) / static_cast<double>(m / 2));
  if (!(b > 0.0)) return 0.0;
  const double mm = static_cast<double>(m);
  const double u0 = std::log(mm + 0.5);
  // Where the continued spectrum crosses lambda.
  const double u_cross = std::log(mm) + std::log(last / lambda) / b;
  const double u1 = std::max(u0, u_cross) + 60.0 / decay;
  const auto rule = QuadratureRule::simpson(8001);
  const auto nodes = rule.nodes();
  const auto weights = rule.weights();
  double total = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double u = u0 + (u1 - u0) * nodes[q];
    const double x = std::exp(u);
    const double eig = last * std::pow(x / mm, -b);
    total += weights[q] * term(eig, x) * x;
  }
  return total * (u1 - u0);
}

double fitted_decay(std::span<const double> eigenvalues) {
  const std::size_t m = eigenvalues.size();
  if (m < 4) return 0.0;
  return std::log(eigenvalues[m / 2 - 1] / eigenvalues[m - 1]) /
         std::log(static_cast<double>(m) / static_cast<double>(m / 2));
}

}  // namespace

SeriesEstimate series_value(std::span<const double> eigenvalues, double p, double lambda) {
  if (!(p > 0.0)) throw DomainError("series_value: p must be positive");
  if (!(lambda > 0.0)) throw DomainError("series_value: lambda must be positive");
  auto term = [p, lambda](double eig, double i) {
    const double r = std::pow(eig, p) / (eig + lambda);
    return r * r / i;
  };
  SeriesEstimate est;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    est.truncated += term(eigenvalues[k], static_cast<double>(k + 1));
  }
  // In u = ln x the far tail decays like exp(-2 p b u).
  est.tail = tail_integral(eigenvalues, lambda, 2.0 * p * fitted_decay(eigenvalues), term);
  est.value = est.truncated + est.tail;
  return est;
}

SeriesEstimate effective_dimension(std::span<const double> eigenvalues, double p, double lambda) {
  if (!(p >= 1.0)) throw DomainError("effective_dimension: p must be >= 1");
  if (!(lambda > 0.0)) throw DomainError("effective_dimension: lambda must be positive");
  auto term = [p, lambda](double eig, double) { return std::pow(eig / (eig + lambda), p); };
  SeriesEstimate est;
  for (double eig : eigenvalues) est.truncated += term(eig, 0.0);
  // x * (lambda(x)/lambda)^p decays like exp((1 - p b) u).
  est.tail = tail_integral(eigenvalues, lambda, p * fitted_decay(eigenvalues) - 1.0, term);
  est.value = est.truncated + est.tail;
  return est;
}

std::vector<PhaseCell> phase_diagram(const PhaseDiagramSpec& spec) {
  if (spec.resolution < 2) throw DomainError("phase diagram resolution must be >= 2");
  if (!(spec.theta_min > 0.0) || !(spec.theta_max > spec.theta_min)) {
    throw DomainError("phase diagram needs 0 < theta_min < theta_max");
  }
  const bool tau_panel = spec.axis == PhaseAxis::noise_exponent;
  if (tau_panel ? !(spec.axis_min >= 0.0) : !(spec.axis_min > 0.0)) {
    throw DomainError("phase diagram axis range must be positive");
  }
  if (!(spec.axis_max > spec.axis_min)) throw DomainError("phase diagram needs axis_min < axis_max");
  check_rate_domain(spec.s, spec.beta);

  const std::size_t r = spec.resolution;
  const double dtheta = (spec.theta_max - spec.theta_min) / static_cast<double>(r - 1);
  const double dvalue = (spec.axis_max - spec.axis_min) / static_cast<double>(r - 1);
  std::vector<PhaseCell> cells;
  cells.reserve(r * r);
  for (std::size_t j = 0; j < r; ++j) {
    const double value = spec.axis_min + dvalue * static_cast<double>(j);
    for (std::size_t i = 0; i < r; ++i) {
      const double theta = spec.theta_min + dtheta * static_cast<double>(i);
      const double s = tau_panel ? spec.s : value;
      const double tau = tau_panel ? value : 0.0;
      const RatePrediction p = predict_rates(s, spec.beta, theta, NoiseModel::decaying(tau));
      PhaseCell cell;
      cell.theta = theta;
      cell.value = value;
      cell.regime = p.regime;
      cell.exponent = p.risk_exponent;
      cell.boundary = p.on_boundary;
      cell.log_factor = p.log_factor;
      const double st = std::min(s, 2.0);
      if (theta < spec.beta) {
        if (tau_panel) {
          const double gap = st * theta - (tau + 1.0 - theta / spec.beta);
          const double half_cell = 0.5 * ((st + 1.0 / spec.beta) * dtheta + dvalue);
          cell.crossover = std::abs(gap) <= half_cell;
        }
      } else if (tau_panel && tau > st * spec.beta) {
        // Noise decays faster than the bias bound: no rate is known here.
        cell.regime = Regime::noiseless;
        cell.exponent.reset();
        cell.unknown_upper_bound = true;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string phase_diagram_csv(const PhaseDiagramSpec& spec, const std::vector<PhaseCell>& cells) {
  std::string out = spec.axis == PhaseAxis::smoothness ? "theta,s,regime,exponent,flags\n"
                                                       : "theta,tau,regime,exponent,flags\n";
  for (const auto& c : cells) {
    std::vector<std::string_view> flags;
    if (c.boundary) flags.push_back("boundary");
    if (c.crossover) flags.push_back("crossover");
    if (c.unknown_upper_bound) flags.push_back("unknown_upper_bound");
    if (c.log_factor) flags.push_back("log_factor");
    std::string joined;
    for (std::size_t k = 0; k < flags.size(); ++k) {
      if (k > 0) joined += ';';
      joined += flags[k];
    }
    out += fmt::format("{},{},{},{},{}\n", format_number(c.theta), format_number(c.value), to_string(c.regime),
                       c.exponent ? format_number(*c.exponent) : std::string(), joined);
  }
  return out;
}

}  // namespace krrlab
