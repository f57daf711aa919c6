#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "krrlab/quadrature.hpp"

namespace krrlab {

inline constexpr std::size_t kDefaultTruncation = 5000;

/// Truncated Mercer eigensystem on [0,1] with the uniform measure.
///
/// Both shipped families use sine eigenfunctions with equally spaced
/// frequencies, e_i(x) = sqrt(2) sin(w_i x) with w_i = w_1 + (i-1) pi:
///   - the min kernel:    w_i = (2i-1) pi / 2,  lambda_i = w_i^{-2}
///   - the power family:  w_i = i pi,           lambda_i = i^{-beta}
///
/// Indices passed to `eigenvalue` / `eigenfunction` are 1-based, matching the
/// Mercer expansion; the spans returned by `eigenvalues()` are 0-based storage.
class Eigensystem {
 public:
  static Eigensystem min_kernel(std::size_t truncation = kDefaultTruncation);
  static Eigensystem power_law_sine(double beta, std::size_t truncation = kDefaultTruncation);

  std::size_t size() const noexcept { return eigenvalues_.size(); }
  double decay_beta() const noexcept { return beta_; }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

  double eigenvalue(std::size_t i) const;
  double frequency(std::size_t i) const;
  double eigenfunction(std::size_t i, double x) const;

  /// Writes e_1(x), ..., e_m(x) into `out` (m = out.size() <= size()).
  void eigenfunctions_at(double x, std::span<double> out) const;

  /// Row-per-point feature matrix Phi(k, i-1) = e_i(points[k]) for i <= columns.
  Eigen::MatrixXd features(std::span<const double> points, std::size_t columns) const;

  /// Bounds [c, C] of i^beta * lambda_i over the stored spectrum.
  std::pair<double, double> decay_constants() const;

  std::string description() const;

 private:
  Eigensystem(std::vector<double> eigenvalues, double first_frequency, double beta,
              std::string description)
      : eigenvalues_(std::move(eigenvalues)),
        first_frequency_(first_frequency),
        beta_(beta),
        description_(std::move(description)) {}

  std::vector<double> eigenvalues_;
  double first_frequency_;
  double beta_;
  std::string description_;
};

enum class KernelKind { closed_form_min, spectral_truncated };

/// A kernel on [0,1]. Immutable; copies share the eigensystem.
class KernelSpec {
 public:
  /// k(x, y) = min(x, y), with its analytic eigensystem truncated at `truncation`.
  static KernelSpec min_kernel(std::size_t truncation = kDefaultTruncation);
  /// k(x, y) = sum_{i <= M} lambda_i e_i(x) e_i(y).
  static KernelSpec spectral(Eigensystem eigensystem);

  KernelKind kind() const noexcept { return kind_; }
  const Eigensystem& eigensystem() const noexcept { return *eigensystem_; }
  std::shared_ptr<const Eigensystem> eigensystem_ptr() const noexcept { return eigensystem_; }
  /// kappa^2 >= sup_x k(x, x).
  double sup_bound() const noexcept { return sup_bound_; }
  const std::string& name() const noexcept { return name_; }

  double eval(double x, double y) const;
  Eigen::MatrixXd gram(std::span<const double> points) const;
  /// rows indexed by `rows`, columns by `cols`.
  Eigen::MatrixXd cross(std::span<const double> rows, std::span<const double> cols) const;

 private:
  KernelSpec(KernelKind kind, std::shared_ptr<const Eigensystem> eigensystem, double sup_bound,
             std::string name)
      : kind_(kind), eigensystem_(std::move(eigensystem)), sup_bound_(sup_bound),
        name_(std::move(name)) {}

  KernelKind kind_;
  std::shared_ptr<const Eigensystem> eigensystem_;
  double sup_bound_;
  std::string name_;
};

/// "min" or "spectral:beta=<float>,M=<int>".
KernelSpec parse_kernel(std::string_view text);

/// max over quadrature nodes x of | int k(x,y) e_i(y) dy - lambda_i e_i(x) |.
double verify_eigensystem(const KernelSpec& kernel, std::size_t i, const QuadratureRule& rule);

void require_unit_interval(double x, const char* what);

}  // namespace krrlab
