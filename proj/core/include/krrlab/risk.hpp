#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "krrlab/krr.hpp"
#include "krrlab/quadrature.hpp"
#include "krrlab/spectral_kernel.hpp"
#include "krrlab/target_models.hpp"

namespace krrlab {

enum class RiskMethod { exact, monte_carlo };

std::string_view to_string(RiskMethod method) noexcept;

/// Conditional (on the design) excess risk and its bias-variance split.
/// Standard errors are zero for exact rows.
struct RiskBreakdown {
  double bias2 = 0.0;
  double variance = 0.0;
  double excess = 0.0;
  RiskMethod method = RiskMethod::exact;
  std::size_t n = 0;
  double lambda = 0.0;
  double sigma2 = 0.0;
  double bias2_se = 0.0;
  double variance_se = 0.0;
  double excess_se = 0.0;
  std::size_t draws = 0;
};

/// Throws DomainError unless the rule has at least 4n+1 nodes.
void require_resolved(const QuadratureRule& rule, std::size_t n);

/// ||E[f_hat | X] - f*||^2_{L2}.
double bias_squared(const KernelSpec& kernel, const Design& design, const Target& target, double lambda,
                    const QuadratureRule& rule, SolverRoute route = SolverRoute::automatic);

/// sigma^2 int k(x,X)^T (K + n lambda I)^{-2} k(x,X) dx.
double variance_exact(const KernelSpec& kernel, const Design& design, double lambda, double sigma2,
                      const QuadratureRule& rule, SolverRoute route = SolverRoute::automatic);

RiskBreakdown excess_risk(const KernelSpec& kernel, const Design& design, const Target& target, double lambda,
                          double sigma2, const QuadratureRule& rule, SolverRoute route = SolverRoute::automatic);

/// Lower-level exact evaluation on a factorized system, with f* pre-sampled at
/// the design points and at the quadrature nodes. Harness cells use this to
/// share one factorization across targets and noise levels.
struct ExactTerms {
  double bias2 = 0.0;
  double unit_variance = 0.0;  ///< variance per unit sigma^2
  double residual = 0.0;       ///< reproduction residual of the noiseless solve
};

double bias_squared(const RidgeSystem& system, const Target& target, std::span<const double> target_at_design,
                    const QuadratureRule& rule, double* residual = nullptr);

/// Integration rule for functions of the fitted predictor: composite Simpson
/// on every gap between consecutive design points (and the two end pieces),
/// at the node density of `rule`. The min-kernel predictor kinks at each
/// design point; equispaced nodes straddling the kinks converge only as O(h^2).
QuadratureRule design_rule(const QuadratureRule& rule, const Design& design);

RiskBreakdown combine(double bias2, double unit_variance, double sigma2, std::size_t n, double lambda);

/// Monte Carlo oracle: `draws` independent noise vectors, each solved and
/// integrated. Bias and variance come from the sample mean predictor:
///   variance = (1/(D-1)) sum_d ||f_d - f_bar||^2,
///   bias2    = ||f_bar - f*||^2 - variance / D.
/// With one draw the variance is reported as zero.
RiskBreakdown monte_carlo_risk(const KernelSpec& kernel, const Design& design, const Target& target, double lambda,
                               double sigma2, std::size_t draws, const QuadratureRule& rule, std::uint64_t seed,
                               SolverRoute route = SolverRoute::automatic);

}  // namespace krrlab
