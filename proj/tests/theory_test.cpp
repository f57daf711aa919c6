#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "krrlab/errors.hpp"
#include "krrlab/spectral_kernel.hpp"
#include "krrlab/theory.hpp"

namespace krrlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(PredictRates, UnderfittingBalance) {
  const auto p = predict_rates(0.5, 2.0, 1.0, NoiseModel::constant());
  EXPECT_DOUBLE_EQ(*p.bias_exponent, 0.5);
  EXPECT_DOUBLE_EQ(*p.variance_exponent, 0.5);
  EXPECT_DOUBLE_EQ(*p.risk_exponent, 0.5);
  EXPECT_TRUE(p.on_boundary);
}

TEST(PredictRates, InterpolatingRegime) {
  const auto p = predict_rates(1.5, 2.0, 2.0, NoiseModel::constant());
  EXPECT_EQ(p.regime, Regime::interpolating);
  EXPECT_EQ(p.floor, NoiseFloor::constant_sigma2);
  EXPECT_DOUBLE_EQ(*p.risk_exponent, 0.0);
  EXPECT_DOUBLE_EQ(*p.bias_exponent, 3.0);
  EXPECT_TRUE(p.upper_bound);
}

TEST(PredictRates, NoiselessSaturates) {
  const auto p = predict_rates(kInf, 2.0, 3.0, NoiseModel::none());
  EXPECT_EQ(p.regime, Regime::noiseless);
  EXPECT_DOUBLE_EQ(*p.risk_exponent, 4.0);
  EXPECT_TRUE(p.upper_bound);
  EXPECT_TRUE(std::isinf(*p.minimax_lower_exponent));
}

TEST(PredictRates, MisspecifiedNoiselessIsNotCovered) {
  const auto p = predict_rates(0.5, 2.0, 3.0, NoiseModel::none());
  EXPECT_TRUE(p.not_covered);
  EXPECT_FALSE(p.risk_exponent.has_value());
  EXPECT_FALSE(p.bias_exponent.has_value());
  EXPECT_DOUBLE_EQ(*p.conjectured_bias_exponent, 1.0);
}

TEST(PredictRates, DecayingNoise) {
  const auto p = predict_rates(1.5, 2.0, 0.5, NoiseModel::decaying(0.5));
  EXPECT_DOUBLE_EQ(*p.variance_exponent, 1.25);
  EXPECT_DOUBLE_EQ(*p.risk_exponent, 0.75);
  EXPECT_EQ(p.regime, Regime::underfitting);
  const auto q = predict_rates(1.5, 2.0, 2.5, NoiseModel::decaying(0.7));
  EXPECT_DOUBLE_EQ(*q.risk_exponent, 0.7);
}

TEST(PredictRates, LogFactorAtSmoothnessTwo) {
  EXPECT_TRUE(predict_rates(2.0, 2.0, 0.5, NoiseModel::constant()).log_factor);
  EXPECT_FALSE(predict_rates(2.5, 2.0, 0.5, NoiseModel::constant()).log_factor);
}

TEST(PredictRates, DomainErrors) {
  EXPECT_THROW(predict_rates(0.0, 2.0, 1.0, NoiseModel::constant()), DomainError);
  EXPECT_THROW(predict_rates(1.0, 1.0, 1.0, NoiseModel::constant()), DomainError);
  EXPECT_THROW(predict_rates(1.0, 2.0, 0.0, NoiseModel::constant()), DomainError);
  EXPECT_THROW(predict_rates(1.0, 2.0, 1.0, NoiseModel::decaying(-1.0)), DomainError);
}

TEST(PredictRates, RegimeInvariants) {
  for (double s : {0.3, 1.0, 1.5, 2.0, 3.0, kInf}) {
    for (double theta = 0.05; theta < 4.0; theta += 0.05) {
      const auto p = predict_rates(s, 2.0, theta, NoiseModel::constant());
      if (theta < 2.0) {
        EXPECT_DOUBLE_EQ(*p.bias_exponent, std::min(s, 2.0) * theta);
        EXPECT_DOUBLE_EQ(*p.risk_exponent, std::min(*p.bias_exponent, *p.variance_exponent));
      } else {
        EXPECT_EQ(p.regime, Regime::interpolating);
        EXPECT_DOUBLE_EQ(*p.risk_exponent, 0.0);
      }
    }
  }
}

TEST(OptimalTheta, Examples) {
  const auto a = optimal_theta(1.5, 2.0);
  EXPECT_DOUBLE_EQ(a.theta, 0.5);
  EXPECT_DOUBLE_EQ(a.rate, 0.75);
  const auto b = optimal_theta(kInf, 2.0);
  EXPECT_DOUBLE_EQ(b.theta, 0.4);
  EXPECT_DOUBLE_EQ(b.rate, 0.8);
  const auto c = optimal_theta(0.5, 2.0);
  EXPECT_DOUBLE_EQ(c.theta, 1.0);
  EXPECT_DOUBLE_EQ(c.rate, 0.5);
}

TEST(OptimalTheta, BalancesBiasAndVariance) {
  for (double s : {0.2, 0.7, 1.5, 2.0, 5.0}) {
    for (double beta : {1.5, 2.0, 4.0}) {
      const auto op = optimal_theta(s, beta);
      const auto p = predict_rates(s, beta, op.theta, NoiseModel::constant());
      EXPECT_NEAR(*p.bias_exponent, *p.variance_exponent, 1e-12);
      EXPECT_NEAR(*p.risk_exponent, op.rate, 1e-12);
    }
  }
}

TEST(OptimalTheta, ArgmaxOnAGridAndUShape) {
  for (double s : {0.5, 1.5, kInf}) {
    const double best = optimal_theta(s, 2.0).theta;
    std::vector<double> grid;
    for (double t = 0.05; t < 2.0; t += 0.05) grid.push_back(t);
    double arg = grid.front();
    double top = -1.0;
    for (double t : grid) {
      const double r = *predict_rates(s, 2.0, t, NoiseModel::constant()).risk_exponent;
      if (r > top) {
        top = r;
        arg = t;
      }
      // Increasing before the kink, decreasing after it.
      const double next = *predict_rates(s, 2.0, t + 0.01, NoiseModel::constant()).risk_exponent;
      if (t + 0.01 <= best) EXPECT_GT(next, r);
      if (t >= best) EXPECT_LT(next, r);
    }
    double nearest = grid.front();
    for (double t : grid) {
      if (std::abs(t - best) < std::abs(nearest - best)) nearest = t;
    }
    EXPECT_DOUBLE_EQ(arg, nearest);
  }
}

TEST(NoiselessRates, MonotoneInTheta) {
  for (double s : {1.2, 1.5, 3.0}) {
    double previous = 0.0;
    for (double theta = 0.1; theta < 5.0; theta += 0.1) {
      const double r = *predict_rates(s, 2.0, theta, NoiseModel::none()).risk_exponent;
      EXPECT_GE(r, previous);
      if (theta >= 2.0) EXPECT_DOUBLE_EQ(r, std::min(s, 2.0) * 2.0);
      previous = r;
    }
  }
}

TEST(ApproximationLaw, ThreeCases) {
  const std::vector<double> lambdas = {1e-2, 1e-4};
  const auto a = approximation_error_law(1.5, 0.0, lambdas);
  EXPECT_EQ(a.kind, ApproximationCase::power);
  EXPECT_NEAR(a.predicted[1], 1e-6, 1e-18);
  const auto b = approximation_error_law(2.0, 0.0, lambdas);
  EXPECT_EQ(b.kind, ApproximationCase::log_corrected);
  EXPECT_NEAR(b.predicted[0], 1e-4 * std::log(100.0), 1e-16);
  const auto c = approximation_error_law(3.7, 0.5, lambdas);
  EXPECT_EQ(c.kind, ApproximationCase::saturated);
  EXPECT_DOUBLE_EQ(c.predicted[1], 1e-8);
  EXPECT_THROW(approximation_error_law(1.0, 1.0, lambdas), DomainError);
  const std::vector<double> bad = {2.0};
  EXPECT_THROW(approximation_error_law(1.0, 0.0, bad), DomainError);
}

std::vector<double> power_spectrum(std::size_t m, double beta) {
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = std::pow(static_cast<double>(i + 1), -beta);
  return out;
}

TEST(SeriesValue, BoundedCase) {
  const auto eig = power_spectrum(100000, 2.0);
  const double a = series_value(eig, 2.0, 1e-4).value;
  const double b = series_value(eig, 2.0, 1e-6).value;
  EXPECT_LT(std::abs(a / b - 1.0), 0.05);
}

TEST(SeriesValue, LogarithmicCase) {
  const auto eig = power_spectrum(100000, 2.0);
  std::vector<double> ratios;
  for (double lambda : {1e-3, 1e-4, 1e-5}) ratios.push_back(series_value(eig, 1.0, lambda).value / std::log(1.0 / lambda));
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_GT(*lo, 0.3);
  EXPECT_LT(*hi, 0.8);
}

TEST(SeriesValue, PolynomialCase) {
  const auto eig = power_spectrum(100000, 2.0);
  std::vector<double> scaled;
  for (double lambda : {1e-3, 1e-4, 1e-5}) scaled.push_back(series_value(eig, 0.5, lambda).value * lambda);
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  EXPECT_LT(*hi / *lo, 1.2);
}

TEST(SeriesValue, TailMatchesDirectSummation) {
  // The tail estimate from M terms should recover the estimate from 16M terms,
  // whose own tail starts deep in the asymptotic regime.
  const auto small = power_spectrum(2000, 2.0);
  const auto large = power_spectrum(32000, 2.0);
  for (double p : {0.5, 1.0}) {
    for (double lambda : {1e-5, 1e-7}) {
      const auto est = series_value(small, p, lambda);
      const auto ref = series_value(large, p, lambda);
      EXPECT_LT(std::abs(est.value - ref.value) / ref.value, 5e-3) << p << " " << lambda;
    }
  }
}

TEST(SeriesValue, MDoublingIsStable) {
  const auto a = series_value(power_spectrum(1000000, 2.0), 0.5, 1e-8).value;
  const auto b = series_value(power_spectrum(500000, 2.0), 0.5, 1e-8).value;
  EXPECT_LT(std::abs(a / b - 1.0), 0.01);
}

TEST(EffectiveDimension, LimitsAndOrdering) {
  const auto eig = power_spectrum(100000, 2.0);
  EXPECT_LT(effective_dimension(eig, 1.0, 1e9).value, 1e-8);
  for (double lambda : {1e-1, 1e-3, 1e-5}) {
    EXPECT_LE(effective_dimension(eig, 2.0, lambda).value, effective_dimension(eig, 1.0, lambda).value);
  }
  EXPECT_THROW(effective_dimension(eig, 0.5, 1e-3), DomainError);
}

TEST(EffectiveDimension, MinKernelScaling) {
  const auto eig = Eigensystem::min_kernel(100000);
  std::vector<double> scaled;
  for (double lambda : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    scaled.push_back(effective_dimension(eig.eigenvalues(), 1.0, lambda).value * std::sqrt(lambda));
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  EXPECT_LT(*hi / *lo, 2.0);
  // Oracle: sum of 1/(1 + lambda w_i^2) with w_i = (2i - 1) pi / 2 tends to 1/(2 sqrt(lambda)).
  EXPECT_NEAR(scaled.back(), 0.5, 0.01);
}

TEST(EffectiveDimension, TailMatchesDirectSummation) {
  const auto small = power_spectrum(4000, 2.0);
  const auto large = power_spectrum(400000, 2.0);
  const double est = effective_dimension(small, 1.0, 1e-8).value;
  const double ref = effective_dimension(large, 1.0, 1e-8).value;
  EXPECT_LT(std::abs(est / ref - 1.0), 1e-2);
}

TEST(PhaseDiagram, SmoothnessPanel) {
  PhaseDiagramSpec spec;
  spec.resolution = 40;
  const auto cells = phase_diagram(spec);
  ASSERT_EQ(cells.size(), 1600u);
  bool under = false, over = false, interp = false;
  for (const auto& c : cells) {
    under |= c.regime == Regime::underfitting;
    over |= c.regime == Regime::overfitting;
    interp |= c.regime == Regime::interpolating;
    if (c.theta >= spec.beta) EXPECT_EQ(c.regime, Regime::interpolating);
  }
  EXPECT_TRUE(under && over && interp);
  // Just below beta with large s the variance dominates.
  PhaseDiagramSpec corner = spec;
  corner.theta_min = 1.9;
  corner.theta_max = 1.95;
  corner.axis_min = 3.0;
  corner.axis_max = 4.0;
  corner.resolution = 2;
  for (const auto& c : phase_diagram(corner)) EXPECT_EQ(c.regime, Regime::overfitting);
}

TEST(PhaseDiagram, BoundaryCell) {
  PhaseDiagramSpec spec;
  spec.axis_min = 1.0;
  spec.axis_max = 2.0;
  spec.theta_min = 0.4;
  spec.theta_max = 0.6;
  spec.resolution = 3;
  const auto cells = phase_diagram(spec);
  // s = 1.5, theta = 0.5: 1.5 * 0.5 = 1 - 0.5 / 2.
  bool found = false;
  for (const auto& c : cells) {
    if (std::abs(c.theta - 0.5) < 1e-12 && std::abs(c.value - 1.5) < 1e-12) {
      EXPECT_TRUE(c.boundary);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(PhaseDiagram, NoisePanelMarksCrossoverAndUnknownCorner) {
  PhaseDiagramSpec spec;
  spec.axis = PhaseAxis::noise_exponent;
  spec.axis_min = 0.0;
  spec.axis_max = 5.0;
  spec.resolution = 51;
  const auto cells = phase_diagram(spec);
  bool crossover = false, unknown = false;
  for (const auto& c : cells) {
    crossover |= c.crossover;
    if (c.unknown_upper_bound) {
      unknown = true;
      EXPECT_GE(c.theta, spec.beta);
      EXPECT_GT(c.value, 3.0);
      EXPECT_FALSE(c.exponent.has_value());
    }
    if (c.theta >= spec.beta && c.value == 0.0) EXPECT_EQ(c.regime, Regime::interpolating);
  }
  EXPECT_TRUE(crossover);
  EXPECT_TRUE(unknown);
  const auto csv = phase_diagram_csv(spec, cells);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "theta,tau,regime,exponent,flags");
  EXPECT_NE(csv.find("unknown_upper_bound"), std::string::npos);
}

TEST(PhaseDiagram, DomainErrors) {
  PhaseDiagramSpec spec;
  spec.resolution = 1;
  EXPECT_THROW(phase_diagram(spec), DomainError);
  spec.resolution = 10;
  spec.axis_min = -1.0;
  EXPECT_THROW(phase_diagram(spec), DomainError);
}

}  // namespace
}  // namespace krrlab
