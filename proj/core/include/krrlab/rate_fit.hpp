#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace krrlab {

struct CurvePoint {
  double n = 0.0;
  double value = 0.0;
  double std = 0.0;
};

using Curve = std::vector<CurvePoint>;

struct FitWindow {
  double n_min = 0.0;
  double n_max = 0.0;

  static FitWindow all();
  /// Upper half of the curve's n-range, [median(n), max(n)] in index terms.
  static FitWindow upper_half(const Curve& curve);
  bool contains(double n) const noexcept { return n >= n_min && n <= n_max; }
};

/// log err = -r log n + b fitted by ordinary least squares; `exponent` is r,
/// so faster decay means a larger exponent.
struct RateEstimate {
  double exponent = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::size_t n_points = 0;
  std::size_t excluded = 0;  ///< points in the window dropped for err <= 0
  FitWindow window;
};

/// Throws DomainError when fewer than three strictly positive points remain.
RateEstimate fit_rate(const Curve& curve, FitWindow window = FitWindow::all());

enum class Reducer { mean, median };

/// Pointwise reduction across trials sharing one n-grid, with the sample
/// standard deviation per n (zero for a single trial).
/// `trials[t][k]` is trial t's value at grid[k].
Curve aggregate_trials(std::span<const double> grid, const std::vector<std::vector<double>>& trials,
                       Reducer reducer = Reducer::mean);

}  // namespace krrlab
