#include "krrlab/rate_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "krrlab/errors.hpp"

namespace krrlab {

FitWindow FitWindow::all() {
  return {0.0, std::numeric_limits<double>::infinity()};
}

FitWindow FitWindow::upper_half(const Curve& curve) {
  if (curve.empty()) return all();
  std::vector<double> ns;
  ns.reserve(curve.size());
  for (const auto& p : curve) ns.push_back(p.n);
  std::sort(ns.begin(), ns.end());
  return {ns[(ns.size() - 1) / 2], ns.back()};
}

RateEstimate fit_rate(const Curve& curve, FitWindow window) {
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t excluded = 0;
  for (const auto& p : curve) {
    if (!window.contains(p.n)) continue;
    if (!(p.value > 0.0) || !(p.n > 0.0)) {
      ++excluded;
      continue;
    }
    xs.push_back(std::log(p.n));
    ys.push_back(std::log(p.value));
  }
  if (xs.size() < 3) {
    throw DomainError(fmt::format("fit_rate: {} usable points in window (excluded {} non-positive); need 3",
                                  xs.size(), excluded));
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_rate: all usable points share one n");
  const double slope = sxy / sxx;
  RateEstimate est;
  est.exponent = -slope;
  est.intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (est.intercept + slope * xs[k]);
    ss += r * r;
  }
  est.rms_residual = std::sqrt(ss / m);
  est.n_points = xs.size();
  est.excluded = excluded;
  est.window = window;
  return est;
}

Curve aggregate_trials(std::span<const double> grid, const std::vector<std::vector<double>>& trials,
                       Reducer reducer) {
  if (trials.empty()) throw DomainError("aggregate_trials: no trials");
  for (const auto& t : trials) {
    if (t.size() != grid.size()) {
      throw DomainError(fmt::format("aggregate_trials: trial has {} values for a grid of {}", t.size(), grid.size()));
    }
  }
  const double count = static_cast<double>(trials.size());
  Curve out;
  out.reserve(grid.size());
  std::vector<double> column(trials.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t t = 0; t < trials.size(); ++t) column[t] = trials[t][k];
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= count;
    double var = 0.0;
    if (trials.size() > 1) {
      for (double v : column) var += (v - mean) * (v - mean);
      var /= count - 1.0;
    }
    double centre = mean;
    if (reducer == Reducer::median) {
      std::sort(column.begin(), column.end());
      const std::size_t h = column.size() / 2;
      centre = column.size() % 2 == 1 ? column[h] : 0.5 * (column[h - 1] + column[h]);
    }
    out.push_back({grid[k], centre, std::sqrt(var)});
  }
  return out;
}

}  // namespace krrlab
