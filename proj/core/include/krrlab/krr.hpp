#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "krrlab/quadrature.hpp"
#include "krrlab/spectral_kernel.hpp"
#include "krrlab/target_models.hpp"

namespace krrlab {

/// Sampled inputs on [0,1], stored in ascending order (the sample is
/// exchangeable, so order carries no information), plus the noise level.
///
/// Construction validates the domain and n >= 1. Separation of the points is
/// guaranteed by `sample_design`; hand-built designs may contain duplicates so
/// that the singular-system path of the solver stays reachable.
class Design {
 public:
  explicit Design(std::vector<double> points, double sigma2 = 0.0, std::uint64_t seed = 0);

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double sigma2() const noexcept { return sigma2_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Smallest gap between consecutive points, including the gap to the origin.
  double min_separation() const noexcept;

 private:
  std::vector<double> points_;
  double sigma2_;
  std::uint64_t seed_;
};

inline constexpr double kMinSeparation = 1e-12;

/// n i.i.d. U[0,1] draws; points within 1e-12 of another point (or of 0) are redrawn.
Design sample_design(std::size_t n, double sigma2, std::uint64_t seed);

/// y_i = f*(x_i) + eps_i with eps_i ~ N(0, sigma2), drawn from noise stream `draw`.
std::vector<double> sample_labels(const Design& design, const Target& target, std::uint64_t draw = 0);

enum class SolverRoute {
  automatic,   ///< structured for the min kernel on a separated design, dense otherwise
  dense,       ///< Cholesky of K + n lambda I
  structured,  ///< min kernel only: tridiagonal K^{-1}, O(n) per solve
};

/// Factorized K + n lambda I for one design.
///
/// The dense route stores the Cholesky factor and represents a fit by its
/// representer weights w = (K + n lambda I)^{-1} y. The structured route uses
/// that K^{-1} = T is tridiagonal for the min kernel, so
/// (K + n lambda I)^{-1} = (I + n lambda T)^{-1} T, and represents a fit by its
/// values z = (I + n lambda T)^{-1} y at the design points; the predictor is the
/// piecewise-linear interpolant of z through (0, 0), flat beyond the last point.
class RidgeSystem {
 public:
  RidgeSystem(KernelSpec kernel, Design design, double lambda, SolverRoute route = SolverRoute::automatic);

  const KernelSpec& kernel() const noexcept { return kernel_; }
  const Design& design() const noexcept { return design_; }
  double lambda() const noexcept { return lambda_; }
  /// n * lambda, the diagonal shift actually applied.
  double shift() const noexcept { return shift_; }
  SolverRoute route() const noexcept { return route_; }

  /// Route-specific fit representation for each column of `labels`.
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& labels) const;
  /// Predictions at `xs` (rows) for each coefficient column.
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& coefficients, std::span<const double> xs) const;
  /// Representer weights of the fit of `labels` with the given coefficients.
  /// The structured route recovers w from the fitted values z either as
  /// (y - z) / (n lambda) or as T z in divided-difference form, whichever
  /// reproduces y more accurately.
  Eigen::VectorXd weights(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& labels) const;
  /// ||(K + n lambda I) w - y|| / ||y|| for the representer weights w.
  double residual(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& labels) const;

  /// int ||(K + n lambda I)^{-1} k(x, X)||^2 dx (variance per unit sigma^2). The
  /// dense route integrates with `rule`; the structured route integrates its
  /// piecewise-linear stencil exactly and only uses `rule` on the dense path.
  double variance_integral(const QuadratureRule& rule) const;

 private:
  void factor_dense();
  void factor_structured();

  double variance_dense(const QuadratureRule& rule) const;
  double variance_structured() const;
  /// T c in divided-difference form; avoids cancellation across close points.
  Eigen::VectorXd apply_inverse_gram(const Eigen::VectorXd& c) const;
  void solve_structured_in_place(double* z) const;
  /// Structured route: ||(K + n lambda I) w - y|| / ||y|| in O(n).
  double residual_of(const Eigen::VectorXd& w, const Eigen::VectorXd& labels) const;

  KernelSpec kernel_;
  Design design_;
  double lambda_;
  double shift_;
  SolverRoute route_;

  // dense route
  Eigen::MatrixXd shifted_gram_;
  Eigen::MatrixXd cholesky_;

  // structured route: A = I + shift * T, T = K^{-1}
  std::vector<double> inv_gap_;
  std::vector<double> t_diag_, t_off_;
  std::vector<double> a_diag_, a_off_;
  std::vector<double> pivots_;  // LDL^T of A
};

/// A solved ridge regression; cheap to copy (shares the factorization).
class RidgeSolution {
 public:
  RidgeSolution(std::shared_ptr<const RidgeSystem> system, Eigen::VectorXd coefficients,
                Eigen::VectorXd labels);

  const RidgeSystem& system() const noexcept { return *system_; }
  double lambda() const noexcept { return system_->lambda(); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  double reproduction_residual() const noexcept { return residual_; }

  double predict(double x) const;
  std::vector<double> predict(std::span<const double> xs) const;

 private:
  std::shared_ptr<const RidgeSystem> system_;
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd weights_;
  double residual_;
};

std::shared_ptr<const RidgeSystem> factorize(const KernelSpec& kernel, const Design& design, double lambda,
                                             SolverRoute route = SolverRoute::automatic);

RidgeSolution solve(std::shared_ptr<const RidgeSystem> system, std::span<const double> labels);

RidgeSolution solve(const KernelSpec& kernel, const Design& design, std::span<const double> labels,
                    double lambda, SolverRoute route = SolverRoute::automatic);

/// E[f_hat | X]: the ridge fit of the noiseless labels f*(X).
RidgeSolution conditional_mean_solution(const KernelSpec& kernel, const Design& design, const Target& target,
                                        double lambda, SolverRoute route = SolverRoute::automatic);

}  // namespace krrlab
