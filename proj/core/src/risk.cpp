#include "krrlab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "krrlab/errors.hpp"
#include "krrlab/random.hpp"

namespace krrlab {

std::string_view to_string(RiskMethod method) noexcept {
  return method == RiskMethod::exact ? "exact" : "monte_carlo";
}

void require_resolved(const QuadratureRule& rule, std::size_t n) {
  if (rule.size() < 4 * n + 1) {
    throw DomainError(fmt::format("quadrature with {} nodes under-resolves n = {} (need >= {})", rule.size(), n,
                                  4 * n + 1));
  }
}

QuadratureRule design_rule(const QuadratureRule& rule, const Design& design) {
  const auto x = design.points();
  std::vector<double> breaks;
  breaks.reserve(x.size() + 2);
  breaks.push_back(0.0);
  breaks.insert(breaks.end(), x.begin(), x.end());
  breaks.push_back(1.0);
  const double density = static_cast<double>(rule.size() - 1);
  std::vector<std::size_t> counts(breaks.size() - 1);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto half_panels = static_cast<std::size_t>(std::ceil(0.5 * (breaks[i + 1] - breaks[i]) * density));
    counts[i] = 2 * std::max<std::size_t>(half_panels, 1) + 1;
  }
  return QuadratureRule::piecewise_simpson(breaks, counts);
}

double bias_squared(const RidgeSystem& system, const Target& target, std::span<const double> target_at_design,
                    const QuadratureRule& rule, double* residual) {
  const auto n = static_cast<Eigen::Index>(target_at_design.size());
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(target_at_design.data(), n);
  const Eigen::VectorXd c = system.coefficients(y);
  if (residual != nullptr) *residual = system.residual(c, y);
  const QuadratureRule adapted = design_rule(rule, system.design());
  const auto at_nodes = target.evaluate(adapted.nodes());
  const Eigen::MatrixXd fitted = system.evaluate(c, adapted.nodes());
  const auto weights = adapted.weights();
  double total = 0.0;
  for (std::size_t q = 0; q < weights.size(); ++q) {
    const double diff = fitted(static_cast<Eigen::Index>(q), 0) - at_nodes[q];
    total += weights[q] * diff * diff;
  }
  return total;
}

double bias_squared(const KernelSpec& kernel, const Design& design, const Target& target, double lambda,
                    const QuadratureRule& rule, SolverRoute route) {
  require_resolved(rule, design.size());
  const RidgeSystem system(kernel, design, lambda, route);
  return bias_squared(system, target, target.evaluate(design.points()), rule);
}

double variance_exact(const KernelSpec& kernel, const Design& design, double lambda, double sigma2,
                      const QuadratureRule& rule, SolverRoute route) {
  require_resolved(rule, design.size());
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be >= 0");
  if (sigma2 == 0.0) return 0.0;
  const RidgeSystem system(kernel, design, lambda, route);
  return sigma2 * system.variance_integral(rule);
}

RiskBreakdown combine(double bias2, double unit_variance, double sigma2, std::size_t n, double lambda) {
  RiskBreakdown r;
  r.bias2 = std::max(bias2, 0.0);
  r.variance = sigma2 == 0.0 ? 0.0 : std::max(sigma2 * unit_variance, 0.0);
  r.excess = r.bias2 + r.variance;
  r.method = RiskMethod::exact;
  r.n = n;
  r.lambda = lambda;
  r.sigma2 = sigma2;
  return r;
}

RiskBreakdown excess_risk(const KernelSpec& kernel, const Design& design, const Target& target, double lambda,
                          double sigma2, const QuadratureRule& rule, SolverRoute route) {
  require_resolved(rule, design.size());
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be >= 0");
  const RidgeSystem system(kernel, design, lambda, route);
  const double bias2 = bias_squared(system, target, target.evaluate(design.points()), rule);
  const double unit_variance = sigma2 == 0.0 ? 0.0 : system.variance_integral(rule);
  return combine(bias2, unit_variance, sigma2, design.size(), lambda);
}

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, (D-1) denominator
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  const auto d = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= d;
  if (v.size() > 1) {
    for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
    m.variance /= d - 1.0;
  }
  return m;
}

}  // namespace

RiskBreakdown monte_carlo_risk(const KernelSpec& kernel, const Design& design, const Target& target, double lambda,
                               double sigma2, std::size_t draws, const QuadratureRule& rule, std::uint64_t seed,
                               SolverRoute route) {
  require_resolved(rule, design.size());
  if (draws == 0) throw DomainError("monte_carlo_risk: draws must be >= 1");
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be >= 0");

  const RidgeSystem system(kernel, design, lambda, route);
  const auto n = static_cast<Eigen::Index>(design.size());
  const auto d = static_cast<Eigen::Index>(draws);
  const auto clean = target.evaluate(design.points());
  const QuadratureRule adapted = design_rule(rule, design);
  const auto at_nodes = target.evaluate(adapted.nodes());

  Engine engine = make_engine(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
  Eigen::MatrixXd labels(n, d);
  for (Eigen::Index col = 0; col < d; ++col) {
    for (Eigen::Index row = 0; row < n; ++row) {
      labels(row, col) = clean[static_cast<std::size_t>(row)] + (sigma2 > 0.0 ? noise(engine) : 0.0);
    }
  }
  const Eigen::MatrixXd coeffs = system.coefficients(labels);

  std::vector<double> err(draws, 0.0);      // ||f_d - f*||^2
  std::vector<double> spread(draws, 0.0);   // ||f_d - f_bar||^2
  std::vector<double> cross(draws, 0.0);    // <f_d - f_bar, f_bar - f*>
  double bias_raw = 0.0;                    // ||f_bar - f*||^2

  const auto nodes = adapted.nodes();
  const auto weights = adapted.weights();
  constexpr std::size_t kBlock = 256;
  for (std::size_t start = 0; start < nodes.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, nodes.size() - start);
    const Eigen::MatrixXd f = system.evaluate(coeffs, nodes.subspan(start, len));
    for (std::size_t r = 0; r < len; ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      const double w = weights[start + r];
      const double fstar = at_nodes[start + r];
      const double mean = f.row(row).mean();
      bias_raw += w * (mean - fstar) * (mean - fstar);
      for (Eigen::Index col = 0; col < d; ++col) {
        const double v = f(row, col);
        const auto k = static_cast<std::size_t>(col);
        err[k] += w * (v - fstar) * (v - fstar);
        spread[k] += w * (v - mean) * (v - mean);
        cross[k] += w * (v - mean) * (mean - fstar);
      }
    }
  }

  RiskBreakdown r;
  r.method = RiskMethod::monte_carlo;
  r.n = design.size();
  r.lambda = lambda;
  r.sigma2 = sigma2;
  r.draws = draws;
  const double dd = static_cast<double>(draws);

  const Moments e = moments(err);
  r.excess = e.mean;
  r.excess_se = std::sqrt(e.variance / dd);

  if (draws == 1) {
    r.variance = 0.0;
    r.bias2 = bias_raw;
    return r;
  }
  // Rescale so the per-draw values average to the unbiased variance estimate.
  for (double& v : spread) v *= dd / (dd - 1.0);
  const Moments v = moments(spread);
  r.variance = v.mean;
  r.variance_se = std::sqrt(v.variance / dd);

  const Moments c = moments(cross);
  r.bias2 = bias_raw - r.variance / dd;
  r.bias2_se = std::sqrt(4.0 * c.variance / dd + 2.0 * (r.variance / dd) * (r.variance / dd));
  return r;
}

}  // namespace krrlab
