#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "krrlab/errors.hpp"
#include "krrlab/quadrature.hpp"
#include "krrlab/spectral_kernel.hpp"

namespace krrlab {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Quadrature, RejectsEvenOrTinyNodeCounts) {
  EXPECT_THROW(QuadratureRule::simpson(2), DomainError);
  EXPECT_THROW(QuadratureRule::simpson(8192), DomainError);
  EXPECT_NO_THROW(QuadratureRule::simpson(3));
}

TEST(Quadrature, WeightsSumToOneAndIntegrateCubicsExactly) {
  const auto rule = QuadratureRule::simpson(101);
  double total = 0.0;
  for (double w : rule.weights()) total += w;
  EXPECT_NEAR(total, 1.0, 1e-15);
  std::vector<double> cubic;
  for (double x : rule.nodes()) cubic.push_back(x * x * x - 2.0 * x);
  EXPECT_NEAR(rule.integrate(cubic), 0.25 - 1.0, 1e-14);
}

TEST(Quadrature, PiecewiseRuleIsExactAcrossAKink) {
  // |x - 0.3|^2 (x - 0.3) changes form at 0.3; integral over [0,1] = (0.7^4 - 0.3^4) / 4.
  const double breaks[] = {0.0, 0.3, 0.3, 1.0};
  const std::size_t counts[] = {5, 7, 9};
  const auto rule = QuadratureRule::piecewise_simpson(breaks, counts);
  EXPECT_EQ(rule.size(), 14u);
  std::vector<double> v;
  for (double x : rule.nodes()) v.push_back(std::abs(x - 0.3) * (x - 0.3) * (x - 0.3) * (x >= 0.3 ? 1.0 : -1.0));
  EXPECT_NEAR(rule.integrate(v), (std::pow(0.7, 4) - std::pow(0.3, 4)) / 4.0, 1e-15);

  const double bad[] = {0.0, 0.5, 0.4};
  const std::size_t two[] = {3, 3};
  EXPECT_THROW(QuadratureRule::piecewise_simpson(bad, two), DomainError);
  const std::size_t even[] = {4};
  EXPECT_THROW(QuadratureRule::piecewise_simpson(std::span(breaks, 2), even), DomainError);
}

TEST(Quadrature, DefaultNodeCount) {
  EXPECT_EQ(default_node_count(10), 8193u);
  EXPECT_EQ(default_node_count(5000), 20001u);
  EXPECT_EQ(default_node_count(2048) % 2, 1u);
}

TEST(MinKernelEigensystem, EigenvaluesMatchClosedForm) {
  const auto eig = Eigensystem::min_kernel(2000);
  for (std::size_t i = 1; i <= 2000; ++i) {
    const double w = (2.0 * static_cast<double>(i) - 1.0) * kPi / 2.0;
    EXPECT_DOUBLE_EQ(eig.eigenvalue(i), 1.0 / (w * w));
    if (i > 1) EXPECT_LT(eig.eigenvalue(i), eig.eigenvalue(i - 1));
  }
}

TEST(MinKernelEigensystem, EigenfunctionsAreOrthonormal) {
  const auto eig = Eigensystem::min_kernel(10);
  const auto rule = QuadratureRule::simpson(8193);
  const Eigen::MatrixXd phi = eig.features(rule.nodes(), 10);
  Eigen::VectorXd w(static_cast<Eigen::Index>(rule.size()));
  for (std::size_t q = 0; q < rule.size(); ++q) w(static_cast<Eigen::Index>(q)) = rule.weights()[q];
  const Eigen::MatrixXd gram = phi.transpose() * w.asDiagonal() * phi;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MinKernelEigensystem, RecurrenceMatchesDirectSine) {
  const auto eig = Eigensystem::min_kernel(5000);
  std::vector<double> values(5000);
  for (double x : {0.0, 0.123, 0.5, 0.987654, 1.0}) {
    eig.eigenfunctions_at(x, values);
    for (std::size_t i = 1; i <= 5000; i += 97) {
      const double direct = std::sqrt(2.0) * std::sin((2.0 * static_cast<double>(i) - 1.0) * kPi / 2.0 * x);
      EXPECT_NEAR(values[i - 1], direct, 1e-9) << "x=" << x << " i=" << i;
    }
  }
}

TEST(MinKernel, EvalIsMinAndSymmetric) {
  const auto k = KernelSpec::min_kernel();
  EXPECT_DOUBLE_EQ(k.eval(0.3, 0.7), 0.3);
  EXPECT_DOUBLE_EQ(k.eval(0.7, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(k.eval(0.42, 0.42), 0.42);
  EXPECT_DOUBLE_EQ(k.sup_bound(), 1.0);
  EXPECT_THROW(k.eval(-0.1, 0.5), DomainError);
  EXPECT_THROW(k.eval(0.5, 1.2), DomainError);
}

TEST(MinKernel, GramOfThreePoints) {
  const auto k = KernelSpec::min_kernel();
  const std::vector<double> x = {0.25, 0.5, 1.0};
  Eigen::Matrix3d expected;
  expected << 0.25, 0.25, 0.25, 0.25, 0.5, 0.5, 0.25, 0.5, 1.0;
  EXPECT_EQ(k.gram(x), expected);
  const std::vector<double> one = {0.6};
  EXPECT_DOUBLE_EQ(k.gram(one)(0, 0), k.eval(0.6, 0.6));
  EXPECT_THROW(k.gram(std::vector<double>{}), DomainError);
}

TEST(MinKernel, GramOfEquispacedPointsIsPositiveDefinite) {
  const auto k = KernelSpec::min_kernel();
  std::vector<double> x;
  for (int i = 1; i <= 100; ++i) x.push_back(i / 100.0);
  const Eigen::MatrixXd g = k.gram(x);
  EXPECT_TRUE(g.isApprox(g.transpose(), 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  EXPECT_GT(solver.eigenvalues().minCoeff(), 0.0);
}

TEST(SpectralKernel, TruncatedMinKernelApproximatesMin) {
  const auto k = KernelSpec::spectral(Eigensystem::min_kernel(2000));
  // Oracle: the remainder sum_{i > 2000} lambda_i e_i(0.4) e_i(0.6), summed directly.
  double tail = 0.0;
  for (int i = 2001; i <= 2000000; ++i) {
    const double w = (2.0 * i - 1.0) * kPi / 2.0;
    tail += 2.0 * std::sin(w * 0.4) * std::sin(w * 0.6) / (w * w);
  }
  EXPECT_LE(std::abs(k.eval(0.4, 0.6) - 0.4), 1e-3);
  EXPECT_NEAR(k.eval(0.4, 0.6), 0.4 - tail, 1e-7);
}

TEST(SpectralKernel, CrossMatchesPointwiseEval) {
  const auto k = parse_kernel("spectral:beta=2,M=300");
  const std::vector<double> rows = {0.0, 0.2, 0.55, 1.0};
  const std::vector<double> cols = {0.1, 0.9};
  const Eigen::MatrixXd c = k.cross(rows, cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      EXPECT_NEAR(c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)), k.eval(rows[r], cols[j]), 1e-12);
    }
  }
  EXPECT_NEAR(k.eval(0.3, 0.8), k.eval(0.8, 0.3), 1e-15);
}

TEST(SpectralKernel, SupBoundDominatesDiagonal) {
  const auto k = parse_kernel("spectral:beta=1.5,M=500");
  for (double x = 0.0; x <= 1.0; x += 0.01) EXPECT_LE(k.eval(x, x), k.sup_bound());
}

TEST(ParseKernel, RejectsUnknownSpecs) {
  EXPECT_EQ(parse_kernel("min").kind(), KernelKind::closed_form_min);
  EXPECT_EQ(parse_kernel("spectral:beta=3,M=50").kind(), KernelKind::spectral_truncated);
  EXPECT_THROW(parse_kernel("rbf"), DomainError);
  EXPECT_THROW(parse_kernel("spectral:beta=0.5,M=50"), DomainError);
}

TEST(VerifyEigensystem, MinKernelResiduals) {
  const auto k = KernelSpec::min_kernel();
  const auto rule = QuadratureRule::simpson(8193);
  EXPECT_LE(verify_eigensystem(k, 1, rule), 1e-8);
  EXPECT_LE(verify_eigensystem(k, 5, rule), 1e-6);
}

TEST(VerifyEigensystem, SpectralKernelIsSelfConsistent) {
  const auto k = KernelSpec::spectral(Eigensystem::power_law_sine(2.0, 64));
  const auto rule = QuadratureRule::simpson(4097);
  for (std::size_t i : {1u, 7u, 64u}) EXPECT_LE(verify_eigensystem(k, i, rule), 1e-9) << i;
}

}  // namespace
}  // namespace krrlab
