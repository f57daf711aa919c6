#include <cmath>
#include <memory>
#include <numbers>

#include <gtest/gtest.h>

#include "krrlab/errors.hpp"
#include "krrlab/target_models.hpp"

namespace krrlab {
namespace {

constexpr double kPi = std::numbers::pi;

class NamedTargets : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    eig_ = std::make_shared<const Eigensystem>(Eigensystem::min_kernel());
    cos_ = std::make_unique<Target>(named_target("cos2pi", eig_));
    sin_ = std::make_unique<Target>(named_target("sin2pi", eig_));
    sparse_ = std::make_unique<Target>(named_target("sin3pi2", eig_));
  }
  static void TearDownTestSuite() {
    cos_.reset();
    sin_.reset();
    sparse_.reset();
    eig_.reset();
  }

  static double frequency(std::size_t i) { return (2.0 * static_cast<double>(i) - 1.0) * kPi / 2.0; }

  static inline std::shared_ptr<const Eigensystem> eig_;
  static inline std::unique_ptr<Target> cos_, sin_, sparse_;
};

TEST_F(NamedTargets, Values) {
  EXPECT_DOUBLE_EQ(cos_->evaluate(0.0), 1.0);
  EXPECT_NEAR(sparse_->evaluate(1.0 / 3.0), 1.0, 1e-15);
  EXPECT_NEAR(sin_->evaluate(0.25), 1.0, 1e-15);
  EXPECT_THROW(cos_->evaluate(1.5), DomainError);
}

// Closed forms of <f, sqrt(2) sin(w_i x)> on [0,1], using cos(w_i) = 0.
TEST_F(NamedTargets, CosineCoefficientsMatchClosedForm) {
  const auto b = cos_->coefficients();
  for (std::size_t i = 1; i <= 200; ++i) {
    const double w = frequency(i);
    EXPECT_NEAR(b[i - 1], std::sqrt(2.0) * w / (w * w - 4.0 * kPi * kPi), 1e-9) << i;
  }
}

TEST_F(NamedTargets, SineCoefficientsMatchClosedForm) {
  const auto b = sin_->coefficients();
  for (std::size_t i = 1; i <= 200; ++i) {
    const double w = frequency(i);
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    EXPECT_NEAR(b[i - 1], sign * std::sqrt(2.0) * 2.0 * kPi / (w * w - 4.0 * kPi * kPi), 1e-9) << i;
  }
}

TEST_F(NamedTargets, SparseTargetIsTheSecondEigenfunction) {
  const auto b = sparse_->coefficients();
  EXPECT_NEAR(b[1], 1.0 / std::sqrt(2.0), 1e-12);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i != 1) EXPECT_LT(std::abs(b[i]), 1e-10) << i + 1;
  }
}

TEST_F(NamedTargets, ParsevalEnergy) {
  EXPECT_NEAR(coefficient_energy(*cos_), 0.5, 1e-8);
  EXPECT_NEAR(coefficient_energy(*sin_), 0.5, 1e-8);
  EXPECT_NEAR(coefficient_energy(*sparse_), 0.5, 1e-10);
}

TEST_F(NamedTargets, SmoothnessEstimates) {
  EXPECT_NEAR(estimate_smoothness(*cos_, *eig_), 0.5, 0.1);
  EXPECT_NEAR(estimate_smoothness(*sin_, *eig_), 1.5, 0.2);
  EXPECT_TRUE(std::isinf(estimate_smoothness(*sparse_, *eig_)));
  EXPECT_DOUBLE_EQ(cos_->nominal_smoothness(), 0.5);
  EXPECT_DOUBLE_EQ(sin_->nominal_smoothness(), 1.5);
  EXPECT_TRUE(std::isinf(sparse_->nominal_smoothness()));
}

TEST_F(NamedTargets, UnknownNameIsRejected) {
  EXPECT_THROW(named_target("tan2pi", eig_), DomainError);
  EXPECT_THROW(parse_target("source:s=-1", eig_), DomainError);
}

TEST_F(NamedTargets, InterpolationNormGrowsWithPower) {
  // sin2pi has b_i^2 ~ i^{-4} and lambda_i^{-t} ~ i^{2t}: partial sums diverge iff t >= 1.5.
  auto increments = [&](double t) {
    const double a = interpolation_norm_partial(*sin_, t, 1000);
    const double b = interpolation_norm_partial(*sin_, t, 2000);
    const double c = interpolation_norm_partial(*sin_, t, 4000);
    return std::pair{b - a, c - b};
  };
  const auto [b1, b2] = increments(1.0);  // terms ~ i^{-2}: increments halve
  const auto [a1, a2] = increments(2.0);  // terms ~ i^0: increments double
  EXPECT_NEAR(b2 / b1, 0.5, 0.05);
  EXPECT_NEAR(a2 / a1, 2.0, 0.1);
  EXPECT_LT(b1, 1e-2);
}

TEST(SynthesizedTargets, FirstCoefficient) {
  const auto eig = std::make_shared<const Eigensystem>(Eigensystem::min_kernel(1000));
  const auto t = synthesize_target(eig, 1.5);
  EXPECT_NEAR(t.coefficients()[0], std::pow(kPi / 2.0, -1.5), 1e-15);
  for (std::size_t i = 1; i <= 1000; i += 111) {
    const double expected = std::pow(eig->eigenvalue(i), 0.75) / std::sqrt(static_cast<double>(i));
    EXPECT_NEAR(t.coefficients()[i - 1], expected, 1e-15 * std::max(1.0, expected));
  }
  EXPECT_EQ(t.evaluate(0.0), 0.0);
}

TEST(SynthesizedTargets, RejectsBadInputs) {
  const auto eig = std::make_shared<const Eigensystem>(Eigensystem::min_kernel(100));
  EXPECT_THROW(synthesize_target(eig, 0.0), DomainError);
  EXPECT_THROW(synthesize_target(eig, -1.0), DomainError);
  CoefficientRule zero;
  zero.amplitude = [](std::size_t) { return 0.0; };
  zero.lower = 0.5;
  EXPECT_THROW(synthesize_target(eig, 1.0, zero), DomainError);
}

TEST(SynthesizedTargets, SmoothnessRoundTrip) {
  const auto eig = std::make_shared<const Eigensystem>(Eigensystem::min_kernel());
  EXPECT_NEAR(estimate_smoothness(synthesize_target(eig, 1.5), *eig), 1.5, 0.05);
  EXPECT_NEAR(estimate_smoothness(synthesize_target(eig, 0.5), *eig), 0.5, 0.05);
  EXPECT_NEAR(estimate_smoothness(parse_target("source:s=2.5", eig), *eig), 2.5, 0.05);
}

TEST(SynthesizedTargets, BoundedAmplitudesKeepTheRate) {
  const auto eig = std::make_shared<const Eigensystem>(Eigensystem::min_kernel());
  CoefficientRule rule;
  rule.amplitude = [](std::size_t i) { return i % 2 == 0 ? 2.0 : -1.0; };
  rule.lower = 1.0;
  rule.upper = 2.0;
  EXPECT_NEAR(estimate_smoothness(synthesize_target(eig, 1.0, rule), *eig), 1.0, 0.1);
}

TEST(SynthesizedTargets, EvaluationMatchesSeries) {
  const auto eig = std::make_shared<const Eigensystem>(Eigensystem::power_law_sine(2.0, 300));
  const auto t = synthesize_target(eig, 1.0);
  for (double x : {0.1, 0.5, 0.93}) {
    double direct = 0.0;
    for (std::size_t i = 1; i <= 300; ++i) direct += t.coefficients()[i - 1] * std::sqrt(2.0) * std::sin(i * kPi * x);
    EXPECT_NEAR(t.evaluate(x), direct, 1e-12);
  }
}

TEST(ZeroTarget, SmoothnessIsUndefined) {
  const auto eig = std::make_shared<const Eigensystem>(Eigensystem::min_kernel(100));
  const auto z = zero_target(eig);
  EXPECT_EQ(z.evaluate(0.4), 0.0);
  EXPECT_THROW(estimate_smoothness(z, *eig), UndefinedError);
}

}  // namespace
}  // namespace krrlab
