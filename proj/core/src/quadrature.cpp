#include "krrlab/quadrature.hpp"

#include <algorithm>
#include <string>

#include "krrlab/errors.hpp"

namespace krrlab {

QuadratureRule QuadratureRule::simpson(std::size_t node_count) {
  if (node_count < 3 || node_count % 2 == 0) {
    throw DomainError("Simpson rule needs an odd node count >= 3, got " +
                      std::to_string(node_count));
  }
  const std::size_t panels = node_count - 1;
  const double h = 1.0 / static_cast<double>(panels);
  std::vector<double> nodes(node_count);
  std::vector<double> weights(node_count);
  for (std::size_t k = 0; k < node_count; ++k) {
    nodes[k] = static_cast<double>(k) * h;
    const double factor = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    weights[k] = factor * h / 3.0;
  }
  nodes.back() = 1.0;
  return QuadratureRule(std::move(nodes), std::move(weights));
}

QuadratureRule QuadratureRule::piecewise_simpson(std::span<const double> breaks,
                                                 std::span<const std::size_t> node_counts) {
  if (breaks.size() != node_counts.size() + 1) {
    throw DomainError("piecewise Simpson: need one node count per piece");
  }
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t total = 0;
  for (auto c : node_counts) total += c;
  nodes.reserve(total);
  weights.reserve(total);
  for (std::size_t i = 0; i < node_counts.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const std::size_t count = node_counts[i];
    if (!(b >= a)) throw DomainError("piecewise Simpson: breakpoints must be non-decreasing");
    if (count < 3 || count % 2 == 0) {
      throw DomainError("Simpson rule needs an odd node count >= 3, got " + std::to_string(count));
    }
    if (b == a) continue;
    const std::size_t panels = count - 1;
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t k = 0; k < count; ++k) {
      nodes.push_back(k == panels ? b : a + static_cast<double>(k) * h);
      const double factor = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      weights.push_back(factor * h / 3.0);
    }
  }
  return QuadratureRule(std::move(nodes), std::move(weights));
}

double QuadratureRule::integrate(std::span<const double> values) const {
  if (values.size() != nodes_.size()) {
    throw DomainError("quadrature: expected " + std::to_string(nodes_.size()) +
                      " samples, got " + std::to_string(values.size()));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    total += weights_[k] * values[k];
  }
  return total;
}

std::size_t default_node_count(std::size_t sample_count) {
  std::size_t nodes = std::max(kMinQuadratureNodes, 4 * sample_count + 1);
  if (nodes % 2 == 0) ++nodes;
  return nodes;
}

}  // namespace krrlab
