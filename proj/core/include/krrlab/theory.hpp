#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace krrlab {

enum class Regime { underfitting, overfitting, interpolating, noiseless };
enum class NoiseFloor { none, constant_sigma2 };

std::string_view to_string(Regime regime) noexcept;

/// Noise schedule sigma^2 = n^{-tau} (tau = 0 is constant noise), or no noise.
struct NoiseModel {
  bool noisy = true;
  double tau = 0.0;

  static NoiseModel constant() { return {true, 0.0}; }
  static NoiseModel decaying(double tau) { return {true, tau}; }
  static NoiseModel none() { return {false, 0.0}; }
};

/// Predicted polynomial decay exponents (error ~ n^{-exponent}) for
/// lambda = c n^{-theta}. Missing exponents are not determined by the theory.
struct RatePrediction {
  std::optional<double> bias_exponent;
  std::optional<double> variance_exponent;
  std::optional<double> risk_exponent;
  Regime regime = Regime::underfitting;
  NoiseFloor floor = NoiseFloor::none;
  /// s == 2: the bias rate carries a logarithmic factor.
  bool log_factor = false;
  /// bias and variance exponents coincide (edge of the U-shape).
  bool on_boundary = false;
  /// bias (and noiseless risk) exponent is an upper-bound rate, valid for s > 1.
  bool upper_bound = false;
  /// theta >= beta with s <= 1: no bias rate is established. `conjectured_bias_exponent`
  /// carries min(s,2) beta, the value the well-specified bound would extend to.
  bool not_covered = false;
  std::optional<double> conjectured_bias_exponent;
  /// Noiseless, theta >= beta: worst case over the source ball cannot beat n^{-s beta}.
  std::optional<double> minimax_lower_exponent;
};

RatePrediction predict_rates(double s, double beta, double theta, NoiseModel noise);

struct OptimalRegularization {
  double theta;
  double rate;
};

/// theta_op = beta / (s~ beta + 1), rate s~ beta / (s~ beta + 1), s~ = min(s, 2).
OptimalRegularization optimal_theta(double s, double beta);

enum class ApproximationCase { power, log_corrected, saturated };

std::string_view to_string(ApproximationCase c) noexcept;

struct ApproximationLaw {
  ApproximationCase kind;
  /// lambda^{s-gamma}, lambda^2 ln(1/lambda) or lambda^2, per input lambda.
  std::vector<double> predicted;
};

/// Order of ||f_lambda - f*||^2 in the [H]^gamma norm.
ApproximationLaw approximation_error_law(double s, double gamma, std::span<const double> lambdas);

/// A truncated spectral sum together with an integral estimate of its tail.
struct SeriesEstimate {
  double value = 0.0;      ///< truncated + tail
  double truncated = 0.0;  ///< sum over the supplied eigenvalues
  double tail = 0.0;       ///< power-law extrapolated remainder
};

/// sum_i (lambda_i^p / (lambda_i + lambda))^2 / i.
SeriesEstimate series_value(std::span<const double> eigenvalues, double p, double lambda);

/// N_p(lambda) = sum_i (lambda_i / (lambda_i + lambda))^p.
SeriesEstimate effective_dimension(std::span<const double> eigenvalues, double p, double lambda);

enum class PhaseAxis { smoothness, noise_exponent };

struct PhaseDiagramSpec {
  PhaseAxis axis = PhaseAxis::smoothness;
  double axis_min = 0.1;
  double axis_max = 4.0;
  double theta_min = 0.05;
  double theta_max = 3.0;
  double beta = 2.0;
  std::size_t resolution = 60;
  /// Fixed smoothness for the noise-exponent panel.
  double s = 1.5;
};

struct PhaseCell {
  double theta = 0.0;
  double value = 0.0;  ///< s or tau
  Regime regime = Regime::underfitting;
  std::optional<double> exponent;
  bool boundary = false;
  bool crossover = false;
  bool unknown_upper_bound = false;
  bool upper_bound = false;
  bool log_factor = false;
};

std::vector<PhaseCell> phase_diagram(const PhaseDiagramSpec& spec);

/// "theta,<s|tau>,regime,exponent,flags" with one row per cell.
std::string phase_diagram_csv(const PhaseDiagramSpec& spec, const std::vector<PhaseCell>& cells);

}  // namespace krrlab
