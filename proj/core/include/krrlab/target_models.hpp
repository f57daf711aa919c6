#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "krrlab/spectral_kernel.hpp"

namespace krrlab {

enum class TargetKind { named, synthesized };

/// Closed-form regression functions used by the min-kernel experiments.
enum class NamedFunction { cos2pi, sin2pi, sin3pi2 };

inline constexpr double kInfiniteSmoothness = std::numeric_limits<double>::infinity();

/// Amplitude sequence a_i for synthesized targets together with the bounds
/// c <= |a_i| <= C it must respect.
struct CoefficientRule {
  std::function<double(std::size_t)> amplitude = [](std::size_t) { return 1.0; };
  double lower = 1.0;
  double upper = 1.0;
};

/// A regression function f* on [0,1] together with its coefficients
/// b_i = <f*, e_i> in the eigenbasis of `eigensystem()`.
class Target {
 public:
  TargetKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double nominal_smoothness() const noexcept { return nominal_s_; }
  std::span<const double> coefficients() const noexcept { return coefficients_; }
  const Eigensystem& eigensystem() const noexcept { return *eigensystem_; }

  double evaluate(double x) const;
  std::vector<double> evaluate(std::span<const double> xs) const;

 private:
  friend Target synthesize_target(std::shared_ptr<const Eigensystem>, double, const CoefficientRule&);
  friend Target named_target(std::string_view, std::shared_ptr<const Eigensystem>);
  friend Target zero_target(std::shared_ptr<const Eigensystem>);

  Target(TargetKind kind, std::string name, NamedFunction function, double nominal_s,
         std::vector<double> coefficients, std::shared_ptr<const Eigensystem> eigensystem)
      : kind_(kind), name_(std::move(name)), function_(function), nominal_s_(nominal_s),
        coefficients_(std::move(coefficients)), eigensystem_(std::move(eigensystem)) {}

  TargetKind kind_;
  std::string name_;
  NamedFunction function_;
  double nominal_s_;
  std::vector<double> coefficients_;
  std::shared_ptr<const Eigensystem> eigensystem_;
};

/// b_i = a_i lambda_i^{s/2} i^{-1/2}.
Target synthesize_target(std::shared_ptr<const Eigensystem> eigensystem, double s,
                         const CoefficientRule& rule = {});

/// "cos2pi" (s = 1/2), "sin2pi" (s = 3/2) or "sin3pi2" (s = inf). Coefficients
/// are obtained by Simpson projection on 16M+1 nodes.
Target named_target(std::string_view name, std::shared_ptr<const Eigensystem> eigensystem);

/// f* == 0; a synthesized target with all coefficients zero.
Target zero_target(std::shared_ptr<const Eigensystem> eigensystem);

/// "cos2pi" | "sin2pi" | "sin3pi2" | "source:s=<float>".
Target parse_target(std::string_view text, std::shared_ptr<const Eigensystem> eigensystem);

inline double evaluate_target(const Target& target, double x) { return target.evaluate(x); }

/// Least-squares slope of log(b_i^2 i) against log(lambda_i) over
/// i in [10, M/10] with |b_i| > 1e-12. Returns +inf when fewer than ten
/// coefficients exceed the threshold.
double estimate_smoothness(const Target& target, const Eigensystem& eigensystem);

/// sum_i b_i^2 plus a power-law estimate of the truncated tail; the L2 energy
/// of f* by Parseval.
double coefficient_energy(const Target& target);

/// Partial sum sum_{i <= m} b_i^2 lambda_i^{-t}, the squared [H]^t norm of the
/// first m terms.
double interpolation_norm_partial(const Target& target, double t, std::size_t m);

}  // namespace krrlab
