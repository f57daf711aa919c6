#include "krrlab/target_models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "krrlab/errors.hpp"

namespace krrlab {

namespace {

constexpr double kCoefficientFloor = 1e-12;
constexpr std::size_t kSparseCount = 10;

double named_value(NamedFunction f, double x) {
  using std::numbers::pi;
  switch (f) {
    case NamedFunction::cos2pi:
      return std::cos(2.0 * pi * x);
    case NamedFunction::sin2pi:
      return std::sin(2.0 * pi * x);
    case NamedFunction::sin3pi2:
      return std::sin(1.5 * pi * x);
  }
  return 0.0;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t count = 0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.count = xs.size();
  return fit;
}

}  // namespace

double Target::evaluate(double x) const {
  require_unit_interval(x, "evaluate_target");
  if (kind_ == TargetKind::named) return named_value(function_, x);
  std::vector<double> e(coefficients_.size());
  eigensystem_->eigenfunctions_at(x, e);
  double total = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) total += coefficients_[i] * e[i];
  return total;
}

std::vector<double> Target::evaluate(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  if (kind_ == TargetKind::named) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      require_unit_interval(xs[k], "evaluate_target");
      out[k] = named_value(function_, xs[k]);
    }
    return out;
  }
  std::vector<double> e(coefficients_.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    require_unit_interval(xs[k], "evaluate_target");
    eigensystem_->eigenfunctions_at(xs[k], e);
    double total = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) total += coefficients_[i] * e[i];
    out[k] = total;
  }
  return out;
}

Target synthesize_target(std::shared_ptr<const Eigensystem> eigensystem, double s,
                         const CoefficientRule& rule) {
  if (!(s > 0.0)) throw DomainError(fmt::format("source smoothness must be positive, got {}", s));
  if (!(rule.lower > 0.0) || rule.upper < rule.lower) {
    throw DomainError(fmt::format("coefficient bounds must satisfy 0 < c <= C, got [{}, {}]",
                                  rule.lower, rule.upper));
  }
  const std::size_t m = eigensystem->size();
  std::vector<double> b(m);
  for (std::size_t i = 1; i <= m; ++i) {
    const double a = rule.amplitude(i);
    const double mag = std::abs(a);
    if (!(mag >= rule.lower && mag <= rule.upper)) {
      throw DomainError(fmt::format("coefficient rule: |a_{}| = {} outside [{}, {}]", i, mag,
                                    rule.lower, rule.upper));
    }
    b[i - 1] = a * std::pow(eigensystem->eigenvalue(i), s / 2.0) / std::sqrt(static_cast<double>(i));
  }
  return Target(TargetKind::synthesized, fmt::format("source:s={}", s), NamedFunction::cos2pi, s,
                std::move(b), std::move(eigensystem));
}

Target named_target(std::string_view name, std::shared_ptr<const Eigensystem> eigensystem) {
  NamedFunction f{};
  double s = 0.0;
  if (name == "cos2pi") {
    f = NamedFunction::cos2pi;
    s = 0.5;
  } else if (name == "sin2pi") {
    f = NamedFunction::sin2pi;
    s = 1.5;
  } else if (name == "sin3pi2") {
    f = NamedFunction::sin3pi2;
    s = kInfiniteSmoothness;
  } else {
    throw DomainError(fmt::format("unknown target '{}'", name));
  }

  const std::size_t m = eigensystem->size();
  const auto rule = QuadratureRule::simpson(16 * m + 1);
  std::vector<double> b(m, 0.0);
  std::vector<double> e(m);
  const auto nodes = rule.nodes();
  const auto weights = rule.weights();
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double wf = weights[q] * named_value(f, nodes[q]);
    if (wf == 0.0) continue;
    eigensystem->eigenfunctions_at(nodes[q], e);
    for (std::size_t i = 0; i < m; ++i) b[i] += wf * e[i];
  }
  return Target(TargetKind::named, std::string(name), f, s, std::move(b), std::move(eigensystem));
}

Target zero_target(std::shared_ptr<const Eigensystem> eigensystem) {
  std::vector<double> b(eigensystem->size(), 0.0);
  return Target(TargetKind::synthesized, "zero", NamedFunction::cos2pi, kInfiniteSmoothness,
                std::move(b), std::move(eigensystem));
}

Target parse_target(std::string_view text, std::shared_ptr<const Eigensystem> eigensystem) {
  constexpr std::string_view prefix = "source:s=";
  if (text.starts_with(prefix)) {
    const std::string_view value = text.substr(prefix.size());
    double s = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw DomainError(fmt::format("target spec: bad smoothness '{}'", value));
    }
    return synthesize_target(std::move(eigensystem), s);
  }
  return named_target(text, std::move(eigensystem));
}

double estimate_smoothness(const Target& target, const Eigensystem& eigensystem) {
  const auto b = target.coefficients();
  const std::size_t m = std::min(b.size(), eigensystem.size());
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(b[i]) > kCoefficientFloor) ++nonzero;
  }
  if (nonzero == 0) throw UndefinedError("estimate_smoothness: all coefficients below 1e-12");
  if (nonzero < kSparseCount) return kInfiniteSmoothness;

  std::vector<double> xs;
  std::vector<double> ys;
  const std::size_t hi = m / 10;
  for (std::size_t i = 10; i <= hi; ++i) {
    const double bi = b[i - 1];
    if (std::abs(bi) <= kCoefficientFloor) continue;
    xs.push_back(std::log(eigensystem.eigenvalue(i)));
    ys.push_back(std::log(bi * bi * static_cast<double>(i)));
  }
  if (xs.size() < 3) {
    throw UndefinedError(fmt::format(
        "estimate_smoothness: only {} usable coefficients in the fit window [10, {}]", xs.size(), hi));
  }
  return least_squares(xs, ys).slope;
}

double coefficient_energy(const Target& target) {
  const auto b = target.coefficients();
  const std::size_t m = b.size();
  double head = 0.0;
  std::size_t nonzero = 0;
  for (double v : b) {
    head += v * v;
    if (std::abs(v) > kCoefficientFloor) ++nonzero;
  }
  if (nonzero < kSparseCount || m < 20) return head;

  // Power law b_i^2 ~ C i^{-p} fitted on the last half of the spectrum.
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = m / 2; i <= m; ++i) {
    const double v = b[i - 1];
    if (std::abs(v) <= kCoefficientFloor) continue;
    xs.push_back(std::log(static_cast<double>(i)));
    ys.push_back(std::log(v * v));
  }
  if (xs.size() < 3) return head;
  const LineFit fit = least_squares(xs, ys);
  const double p = -fit.slope;
  if (!(p > 1.0)) return head;
  const double start = static_cast<double>(m) + 0.5;
  const double tail = std::exp(fit.intercept) * std::pow(start, 1.0 - p) / (p - 1.0);
  return head + tail;
}

double interpolation_norm_partial(const Target& target, double t, std::size_t m) {
  const auto b = target.coefficients();
  const auto& eig = target.eigensystem();
  if (m > b.size()) throw DomainError("interpolation_norm_partial: m exceeds stored coefficients");
  double total = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    total += b[i - 1] * b[i - 1] * std::pow(eig.eigenvalue(i), -t);
  }
  return total;
}

}  // namespace krrlab
