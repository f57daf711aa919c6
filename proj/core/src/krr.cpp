#include "krrlab/krr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "krrlab/errors.hpp"
#include "krrlab/random.hpp"

namespace krrlab {

Design::Design(std::vector<double> points, double sigma2, std::uint64_t seed)
    : points_(std::move(points)), sigma2_(sigma2), seed_(seed) {
  if (points_.empty()) throw DomainError("design needs at least one point");
  if (!(sigma2_ >= 0.0)) throw DomainError(fmt::format("noise variance must be >= 0, got {}", sigma2_));
  for (double x : points_) require_unit_interval(x, "design");
  std::sort(points_.begin(), points_.end());
}

double Design::min_separation() const noexcept {
  double gap = points_.front();
  for (std::size_t k = 1; k < points_.size(); ++k) gap = std::min(gap, points_[k] - points_[k - 1]);
  return gap;
}

Design sample_design(std::size_t n, double sigma2, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_design: n must be >= 1");
  Engine engine = make_engine(substream(seed, 0));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = uniform(engine);
  for (;;) {
    std::sort(x.begin(), x.end());
    bool clean = true;
    double previous = 0.0;
    for (double& v : x) {
      if (v - previous <= kMinSeparation) {
        v = uniform(engine);
        clean = false;
      } else {
        previous = v;
      }
    }
    if (clean) break;
  }
  return Design(std::move(x), sigma2, seed);
}

std::vector<double> sample_labels(const Design& design, const Target& target, std::uint64_t draw) {
  std::vector<double> y = target.evaluate(design.points());
  if (design.sigma2() == 0.0) return y;
  Engine engine = make_engine(substream(design.seed(), 1 + draw));
  std::normal_distribution<double> noise(0.0, std::sqrt(design.sigma2()));
  for (double& v : y) v += noise(engine);
  return y;
}

RidgeSystem::RidgeSystem(KernelSpec kernel, Design design, double lambda, SolverRoute route)
    : kernel_(std::move(kernel)),
      design_(std::move(design)),
      lambda_(lambda),
      shift_(static_cast<double>(design_.size()) * lambda),
      route_(route) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError(fmt::format("ridge parameter must be finite and >= 0, got {}", lambda));
  }
  if (route_ == SolverRoute::automatic) {
    route_ = (kernel_.kind() == KernelKind::closed_form_min && design_.min_separation() > 0.0)
                 ? SolverRoute::structured
                 : SolverRoute::dense;
  }
  if (route_ == SolverRoute::structured) {
    if (kernel_.kind() != KernelKind::closed_form_min) {
      throw DomainError("structured solver route requires the closed-form min kernel");
    }
    factor_structured();
  } else {
    factor_dense();
  }
}

void RidgeSystem::factor_dense() {
  const auto points = design_.points();
  const auto n = static_cast<Eigen::Index>(points.size());
  shifted_gram_ = kernel_.gram(points);
  shifted_gram_.diagonal().array() += shift_;

  // Left-looking Cholesky without pivoting; reports the failing pivot.
  cholesky_ = Eigen::MatrixXd::Zero(n, n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd column = shifted_gram_.col(j).tail(n - j);
    if (j > 0) {
      column.noalias() -= cholesky_.block(j, 0, n - j, j) * cholesky_.row(j).head(j).transpose();
    }
    const double pivot = column(0);
    const double tolerance = static_cast<double>(n) * eps * std::abs(shifted_gram_(j, j));
    if (!(pivot > tolerance)) {
      throw SingularSystemError(
          static_cast<std::size_t>(j), pivot,
          fmt::format("K + n*lambda*I is not numerically positive definite: pivot {} (x = {}) is {:.3e}",
                      j, points[static_cast<std::size_t>(j)], pivot));
    }
    const double root = std::sqrt(pivot);
    cholesky_(j, j) = root;
    cholesky_.col(j).tail(n - j - 1) = column.tail(n - j - 1) / root;
  }
}

void RidgeSystem::factor_structured() {
  const auto x = design_.points();
  const std::size_t n = x.size();
  inv_gap_.assign(n, 0.0);
  auto& inv_gap = inv_gap_;
  for (std::size_t k = 0; k < n; ++k) {
    const double gap = k == 0 ? x[0] : x[k] - x[k - 1];
    if (!(gap > 0.0)) {
      throw SingularSystemError(
          k, gap,
          fmt::format("min-kernel Gram is singular: point {} (x = {}) repeats its predecessor or sits at 0", k,
                      x[k]));
    }
    inv_gap[k] = 1.0 / gap;
  }
  t_diag_.assign(n, 0.0);
  t_off_.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    t_diag_[k] = inv_gap[k] + (k + 1 < n ? inv_gap[k + 1] : 0.0);
    if (k + 1 < n) t_off_[k] = -inv_gap[k + 1];
  }
  a_diag_.resize(n);
  a_off_.resize(t_off_.size());
  for (std::size_t k = 0; k < n; ++k) a_diag_[k] = 1.0 + shift_ * t_diag_[k];
  for (std::size_t k = 0; k + 1 < n; ++k) a_off_[k] = shift_ * t_off_[k];

  pivots_.resize(n);
  pivots_[0] = a_diag_[0];
  for (std::size_t k = 1; k < n; ++k) {
    pivots_[k] = a_diag_[k] - a_off_[k - 1] * a_off_[k - 1] / pivots_[k - 1];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(pivots_[k] > 0.0)) {
      throw SingularSystemError(k, pivots_[k],
                                fmt::format("I + n*lambda*T lost positive definiteness at pivot {}", k));
    }
  }
}

Eigen::MatrixXd RidgeSystem::coefficients(const Eigen::MatrixXd& labels) const {
  const auto n = static_cast<Eigen::Index>(design_.size());
  if (labels.rows() != n) {
    throw DomainError(fmt::format("expected {} labels per column, got {}", n, labels.rows()));
  }
  Eigen::MatrixXd c = labels;
  if (route_ == SolverRoute::dense) {
    const auto lower = cholesky_.triangularView<Eigen::Lower>();
    lower.solveInPlace(c);
    lower.transpose().solveInPlace(c);
    return c;
  }
  // One step of iterative refinement, residual in divided-difference form.
  for (Eigen::Index col = 0; col < c.cols(); ++col) {
    solve_structured_in_place(c.col(col).data());
    Eigen::VectorXd r = labels.col(col) - c.col(col) - shift_ * apply_inverse_gram(c.col(col));
    solve_structured_in_place(r.data());
    c.col(col) += r;
  }
  return c;
}

void RidgeSystem::solve_structured_in_place(double* z) const {
  const auto n = static_cast<Eigen::Index>(design_.size());
  for (Eigen::Index k = 1; k < n; ++k) z[k] -= (a_off_[k - 1] / pivots_[k - 1]) * z[k - 1];
  for (Eigen::Index k = 0; k < n; ++k) z[k] /= pivots_[k];
  for (Eigen::Index k = n - 1; k-- > 0;) z[k] -= (a_off_[k] / pivots_[k]) * z[k + 1];
}

Eigen::VectorXd RidgeSystem::apply_inverse_gram(const Eigen::VectorXd& c) const {
  const auto n = static_cast<Eigen::Index>(design_.size());
  Eigen::VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double v = inv_gap_[k] * (c(k) - (k > 0 ? c(k - 1) : 0.0));
    if (k + 1 < n) v -= inv_gap_[k + 1] * (c(k + 1) - c(k));
    out(k) = v;
  }
  return out;
}

namespace {

/// Interpolation weights of the min-kernel predictor at x: (first index, weight
/// on it, weight on the next index). The second weight is zero outside the hull.
struct Stencil {
  std::size_t index;
  double left;
  double right;
};

Stencil stencil_at(std::span<const double> points, double x) {
  const std::size_t n = points.size();
  if (x < points[0]) return {0, x / points[0], 0.0};
  if (x >= points[n - 1]) return {n - 1, 1.0, 0.0};
  const auto it = std::upper_bound(points.begin(), points.end(), x);
  const auto m = static_cast<std::size_t>(it - points.begin()) - 1;
  const double h = points[m + 1] - points[m];
  return {m, (points[m + 1] - x) / h, (x - points[m]) / h};
}

}  // namespace

Eigen::MatrixXd RidgeSystem::evaluate(const Eigen::MatrixXd& coefficients, std::span<const double> xs) const {
  for (double x : xs) require_unit_interval(x, "predict");
  const auto points = design_.points();
  const auto rows = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd out(rows, coefficients.cols());
  if (route_ == SolverRoute::structured) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Stencil s = stencil_at(points, xs[static_cast<std::size_t>(r)]);
      const auto i = static_cast<Eigen::Index>(s.index);
      if (s.right == 0.0) {
        out.row(r) = s.left * coefficients.row(i);
      } else {
        out.row(r) = s.left * coefficients.row(i) + s.right * coefficients.row(i + 1);
      }
    }
    return out;
  }
  constexpr std::size_t kBlock = 1024;
  for (std::size_t start = 0; start < xs.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, xs.size() - start);
    const Eigen::MatrixXd k = kernel_.cross(xs.subspan(start, len), points);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)).noalias() = k * coefficients;
  }
  return out;
}

Eigen::VectorXd RidgeSystem::weights(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& labels) const {
  if (route_ == SolverRoute::dense) return coefficients;
  Eigen::VectorXd by_difference = apply_inverse_gram(coefficients);
  if (shift_ == 0.0) return by_difference;
  // Rounding in z costs about eps / (n lambda) through the subtraction and
  // n lambda eps / (smallest gap) through T; keep whichever reproduces y better.
  Eigen::VectorXd by_subtraction = (labels - coefficients) / shift_;
  return residual_of(by_subtraction, labels) < residual_of(by_difference, labels) ? by_subtraction : by_difference;
}

double RidgeSystem::residual(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& labels) const {
  if (route_ == SolverRoute::dense) {
    const double scale = labels.norm();
    const double err = (shifted_gram_ * coefficients - labels).norm();
    return scale > 0.0 ? err / scale : err;
  }
  return residual_of(weights(coefficients, labels), labels);
}

double RidgeSystem::residual_of(const Eigen::VectorXd& w, const Eigen::VectorXd& labels) const {
  // (K w)_i = sum_{j <= i} x_j w_j + x_i sum_{j > i} w_j. Extended-precision
  // running sums: w reaches ~1/x_1 when the target does not vanish at 0.
  const auto x = design_.points();
  const auto n = w.size();
  std::vector<long double> above(static_cast<std::size_t>(n) + 1, 0.0L);
  for (Eigen::Index i = n; i-- > 0;) above[i] = above[i + 1] + w(i);
  long double below = 0.0L;
  double err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    below += static_cast<long double>(x[k]) * w(i);
    const long double applied = below + x[k] * above[k + 1] + static_cast<long double>(shift_) * w(i);
    const auto diff = static_cast<double>(applied - labels(i));
    err += diff * diff;
  }
  const double scale = labels.norm();
  return scale > 0.0 ? std::sqrt(err) / scale : std::sqrt(err);
}

double RidgeSystem::variance_integral(const QuadratureRule& rule) const {
  return route_ == SolverRoute::dense ? variance_dense(rule) : variance_structured();
}

double RidgeSystem::variance_dense(const QuadratureRule& rule) const {
  const auto nodes = rule.nodes();
  const auto weights = rule.weights();
  const auto lower = cholesky_.triangularView<Eigen::Lower>();
  constexpr std::size_t kBlock = 1024;
  double total = 0.0;
  for (std::size_t start = 0; start < nodes.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, nodes.size() - start);
    Eigen::MatrixXd v = kernel_.cross(design_.points(), nodes.subspan(start, len));
    lower.solveInPlace(v);
    lower.transpose().solveInPlace(v);
    for (std::size_t q = 0; q < len; ++q) {
      total += weights[start + q] * v.col(static_cast<Eigen::Index>(q)).squaredNorm();
    }
  }
  return total;
}

double RidgeSystem::variance_structured() const {
  // (K + sI)^{-1} k(x, X) = A^{-1} t(x) with t(x) the two-point stencil, so the
  // integral is tr(A^{-2} W) for the tridiagonal W = int t(x) t(x)^T dx. The
  // stencil is piecewise linear in the design points, so W is integrated
  // segment by segment in closed form; node-based quadrature misses segments
  // shorter than its spacing.
  const auto points = design_.points();
  const std::size_t n = points.size();
  std::vector<double> w_diag(n, 0.0);
  std::vector<double> w_off(n > 0 ? n - 1 : 0, 0.0);
  w_diag[0] += points[0] / 3.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = points[k + 1] - points[k];
    w_diag[k] += h / 3.0;
    w_diag[k + 1] += h / 3.0;
    w_off[k] += h / 6.0;
  }
  w_diag[n - 1] += 1.0 - points[n - 1];

  // Band of A^{-2} = -d/ds (A + sI)^{-1} at s = 0, differentiating the
  // forward/backward pivot recurrences of the tridiagonal inverse.
  std::vector<double> f(n), df(n), g(n), dg(n);
  f[0] = a_diag_[0];
  df[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double b2 = a_off_[k - 1] * a_off_[k - 1];
    f[k] = a_diag_[k] - b2 / f[k - 1];
    df[k] = 1.0 + b2 * df[k - 1] / (f[k - 1] * f[k - 1]);
  }
  g[n - 1] = a_diag_[n - 1];
  dg[n - 1] = 1.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    const double b2 = a_off_[k] * a_off_[k];
    g[k] = a_diag_[k] - b2 / g[k + 1];
    dg[k] = 1.0 + b2 * dg[k + 1] / (g[k + 1] * g[k + 1]);
  }
  std::vector<double> inv_diag(n), d_inv_diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    double denom = f[k];
    double d_denom = df[k];
    if (k + 1 < n) {
      const double b2 = a_off_[k] * a_off_[k];
      denom -= b2 / g[k + 1];
      d_denom += b2 * dg[k + 1] / (g[k + 1] * g[k + 1]);
    }
    inv_diag[k] = 1.0 / denom;
    d_inv_diag[k] = -d_denom * inv_diag[k] * inv_diag[k];
  }

  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += w_diag[k] * (-d_inv_diag[k]);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    // (A^{-1})_{k,k+1} = -b_k (A^{-1})_{k+1,k+1} / f_k
    const double b = a_off_[k];
    const double d_off = -b * (d_inv_diag[k + 1] * f[k] - inv_diag[k + 1] * df[k]) / (f[k] * f[k]);
    total += 2.0 * w_off[k] * (-d_off);
  }
  return total;
}

RidgeSolution::RidgeSolution(std::shared_ptr<const RidgeSystem> system, Eigen::VectorXd coefficients,
                             Eigen::VectorXd labels)
    : system_(std::move(system)), coefficients_(std::move(coefficients)) {
  weights_ = system_->weights(coefficients_, labels);
  residual_ = system_->residual(coefficients_, labels);
}

double RidgeSolution::predict(double x) const {
  const double xs[1] = {x};
  return system_->evaluate(coefficients_, xs)(0, 0);
}

std::vector<double> RidgeSolution::predict(std::span<const double> xs) const {
  const Eigen::MatrixXd values = system_->evaluate(coefficients_, xs);
  return {values.data(), values.data() + values.size()};
}

std::shared_ptr<const RidgeSystem> factorize(const KernelSpec& kernel, const Design& design, double lambda,
                                             SolverRoute route) {
  return std::make_shared<const RidgeSystem>(kernel, design, lambda, route);
}

RidgeSolution solve(std::shared_ptr<const RidgeSystem> system, std::span<const double> labels) {
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  Eigen::VectorXd c = system->coefficients(y);
  return RidgeSolution(std::move(system), std::move(c), y);
}

RidgeSolution solve(const KernelSpec& kernel, const Design& design, std::span<const double> labels, double lambda,
                    SolverRoute route) {
  return solve(factorize(kernel, design, lambda, route), labels);
}

RidgeSolution conditional_mean_solution(const KernelSpec& kernel, const Design& design, const Target& target,
                                        double lambda, SolverRoute route) {
  const std::vector<double> clean = target.evaluate(design.points());
  return solve(kernel, design, clean, lambda, route);
}

}  // namespace krrlab
