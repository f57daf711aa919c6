#include "krrlab/spectral_kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include <fmt/core.h>

#include "krrlab/errors.hpp"
#include "sine_series.hpp"

namespace krrlab {

void require_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError(fmt::format("{}: point {} lies outside [0,1]", what, x));
  }
}

Eigensystem Eigensystem::min_kernel(std::size_t truncation) {
  if (truncation == 0) throw DomainError("eigensystem truncation must be positive");
  std::vector<double> values(truncation);
  for (std::size_t k = 0; k < truncation; ++k) {
    const double w = (2.0 * static_cast<double>(k + 1) - 1.0) * std::numbers::pi / 2.0;
    values[k] = 1.0 / (w * w);
  }
  return Eigensystem(std::move(values), std::numbers::pi / 2.0, 2.0,
                     fmt::format("min-kernel(M={})", truncation));
}

Eigensystem Eigensystem::power_law_sine(double beta, std::size_t truncation) {
  if (!(beta > 1.0)) throw DomainError(fmt::format("decay beta must exceed 1, got {}", beta));
  if (truncation == 0) throw DomainError("eigensystem truncation must be positive");
  std::vector<double> values(truncation);
  for (std::size_t k = 0; k < truncation; ++k) {
    values[k] = std::pow(static_cast<double>(k + 1), -beta);
  }
  return Eigensystem(std::move(values), std::numbers::pi, beta,
                     fmt::format("power-sine(beta={},M={})", beta, truncation));
}

double Eigensystem::eigenvalue(std::size_t i) const {
  if (i == 0 || i > size()) throw DomainError(fmt::format("eigen index {} out of 1..{}", i, size()));
  return eigenvalues_[i - 1];
}

double Eigensystem::frequency(std::size_t i) const {
  if (i == 0) throw DomainError("eigen index is 1-based");
  return first_frequency_ + static_cast<double>(i - 1) * std::numbers::pi;
}

double Eigensystem::eigenfunction(std::size_t i, double x) const {
  if (i == 0 || i > size()) throw DomainError(fmt::format("eigen index {} out of 1..{}", i, size()));
  require_unit_interval(x, "eigenfunction");
  return std::numbers::sqrt2 * std::sin(frequency(i) * x);
}

void Eigensystem::eigenfunctions_at(double x, std::span<double> out) const {
  if (out.size() > size()) throw DomainError("requested more eigenfunctions than stored");
  require_unit_interval(x, "eigenfunctions_at");
  detail::sine_series(first_frequency_, std::numbers::pi, x, std::numbers::sqrt2, out);
}

Eigen::MatrixXd Eigensystem::features(std::span<const double> points, std::size_t columns) const {
  if (columns > size()) throw DomainError("requested more eigenfunctions than stored");
  // Row-major scratch so each point fills a contiguous row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi(points.size(), columns);
  for (std::size_t k = 0; k < points.size(); ++k) {
    eigenfunctions_at(points[k], std::span<double>(phi.row(static_cast<Eigen::Index>(k)).data(), columns));
  }
  return phi;
}

std::pair<double, double> Eigensystem::decay_constants() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const double scaled = std::pow(static_cast<double>(k + 1), beta_) * eigenvalues_[k];
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  return {lo, hi};
}

std::string Eigensystem::description() const { return description_; }

KernelSpec KernelSpec::min_kernel(std::size_t truncation) {
  return KernelSpec(KernelKind::closed_form_min,
                    std::make_shared<const Eigensystem>(Eigensystem::min_kernel(truncation)), 1.0,
                    "min");
}

KernelSpec KernelSpec::spectral(Eigensystem eigensystem) {
  // sup_x e_i(x)^2 = 2 for the sine families.
  double trace = 0.0;
  for (double v : eigensystem.eigenvalues()) trace += v;
  auto name = fmt::format("spectral[{}]", eigensystem.description());
  return KernelSpec(KernelKind::spectral_truncated,
                    std::make_shared<const Eigensystem>(std::move(eigensystem)), 2.0 * trace,
                    std::move(name));
}

double KernelSpec::eval(double x, double y) const {
  require_unit_interval(x, "kernel eval");
  require_unit_interval(y, "kernel eval");
  if (kind_ == KernelKind::closed_form_min) return std::min(x, y);

  const auto& eig = *eigensystem_;
  std::vector<double> ex(eig.size());
  std::vector<double> ey(eig.size());
  eig.eigenfunctions_at(x, ex);
  eig.eigenfunctions_at(y, ey);
  const auto lambdas = eig.eigenvalues();
  // Symmetric in (x, y): the product is accumulated in a fixed order.
  double total = 0.0;
  for (std::size_t i = 0; i < eig.size(); ++i) total += lambdas[i] * (ex[i] * ey[i]);
  return total;
}

Eigen::MatrixXd KernelSpec::gram(std::span<const double> points) const {
  if (points.empty()) throw DomainError("gram: empty point list");
  Eigen::MatrixXd g = cross(points, points);
  // Exact symmetry regardless of accumulation order.
  const Eigen::Index n = g.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) g(j, i) = g(i, j);
  }
  return g;
}

Eigen::MatrixXd KernelSpec::cross(std::span<const double> rows, std::span<const double> cols) const {
  for (double x : rows) require_unit_interval(x, "kernel cross");
  for (double y : cols) require_unit_interval(y, "kernel cross");
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd out(nr, nc);
  if (kind_ == KernelKind::closed_form_min) {
    for (Eigen::Index j = 0; j < nc; ++j) {
      for (Eigen::Index i = 0; i < nr; ++i) out(i, j) = std::min(rows[i], cols[j]);
    }
    return out;
  }

  const auto& eig = *eigensystem_;
  const std::size_t m = eig.size();
  const Eigen::Map<const Eigen::VectorXd> lambdas(eig.eigenvalues().data(), static_cast<Eigen::Index>(m));
  const Eigen::MatrixXd left = eig.features(rows, m) * lambdas.asDiagonal();
  constexpr std::size_t kBlock = 512;
  for (std::size_t start = 0; start < cols.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, cols.size() - start);
    const Eigen::MatrixXd right = eig.features(cols.subspan(start, len), m);
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)).noalias() =
        left * right.transpose();
  }
  return out;
}

namespace {

double parse_number(std::string_view text, std::string_view key) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DomainError(fmt::format("kernel spec: bad value '{}' for {}", text, key));
  }
  return value;
}

}  // namespace

KernelSpec parse_kernel(std::string_view text) {
  if (text == "min") return KernelSpec::min_kernel();
  constexpr std::string_view prefix = "spectral:";
  if (!text.starts_with(prefix)) {
    throw DomainError(fmt::format("unknown kernel '{}' (expected 'min' or 'spectral:beta=..,M=..')", text));
  }
  std::string_view rest = text.substr(prefix.size());
  double beta = 0.0;
  bool have_beta = false;
  std::size_t truncation = kDefaultTruncation;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw DomainError(fmt::format("kernel spec: malformed '{}'", item));
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    if (key == "beta") {
      beta = parse_number(value, key);
      have_beta = true;
    } else if (key == "M") {
      const double m = parse_number(value, key);
      if (!(m >= 1.0) || m != std::floor(m)) throw DomainError("kernel spec: M must be a positive integer");
      truncation = static_cast<std::size_t>(m);
    } else {
      throw DomainError(fmt::format("kernel spec: unknown key '{}'", key));
    }
  }
  if (!have_beta) throw DomainError("kernel spec: spectral kernel needs beta=<float>");
  return KernelSpec::spectral(Eigensystem::power_law_sine(beta, truncation));
}

double verify_eigensystem(const KernelSpec& kernel, std::size_t i, const QuadratureRule& rule) {
  const auto& eig = kernel.eigensystem();
  const double lambda_i = eig.eigenvalue(i);
  const auto nodes = rule.nodes();
  const auto weights = rule.weights();
  const std::size_t n = nodes.size();

  std::vector<double> ei(n);
  for (std::size_t q = 0; q < n; ++q) ei[q] = eig.eigenfunction(i, nodes[q]);

  std::vector<double> applied(n);
  if (kernel.kind() == KernelKind::closed_form_min) {
    // int min(x,y) g(y) dy = sum_{y<=x} w y g + x sum_{y>x} w g, via prefix/suffix sums.
    std::vector<double> below(n + 1, 0.0);
    std::vector<double> above(n + 1, 0.0);
    for (std::size_t q = 0; q < n; ++q) below[q + 1] = below[q] + weights[q] * nodes[q] * ei[q];
    for (std::size_t q = n; q-- > 0;) above[q] = above[q + 1] + weights[q] * ei[q];
    for (std::size_t q = 0; q < n; ++q) applied[q] = below[q + 1] + nodes[q] * above[q + 1];
  } else {
    // Apply the quadrature-discretized operator through the expansion:
    // sum_q w_q k(x, y_q) e_i(y_q) = sum_j lambda_j e_j(x) <e_j, e_i>_q.
    const std::size_t m = eig.size();
    const Eigen::MatrixXd phi = eig.features(nodes, m);
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> e(ei.data(), static_cast<Eigen::Index>(n));
    const Eigen::Map<const Eigen::VectorXd> lambdas(eig.eigenvalues().data(), static_cast<Eigen::Index>(m));
    const Eigen::VectorXd inner = phi.transpose() * w.cwiseProduct(e);
    const Eigen::VectorXd result = phi * lambdas.cwiseProduct(inner);
    for (std::size_t q = 0; q < n; ++q) applied[q] = result(static_cast<Eigen::Index>(q));
  }

  double residual = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    residual = std::max(residual, std::abs(applied[q] - lambda_i * ei[q]));
  }
  return residual;
}

}  // namespace krrlab
