#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace krrlab {

/// Composite Simpson rule on [0,1] with an odd number of equispaced nodes.
class QuadratureRule {
 public:
  static QuadratureRule simpson(std::size_t node_count);
  /// Composite Simpson on each piece [breaks[i], breaks[i+1]] with
  /// node_counts[i] nodes (odd, >= 3). Zero-length pieces are skipped.
  static QuadratureRule piecewise_simpson(std::span<const double> breaks, std::span<const std::size_t> node_counts);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Weighted sum of `values` (sampled at `nodes()`), accumulated in index order.
  double integrate(std::span<const double> values) const;

 private:
  QuadratureRule(std::vector<double> nodes, std::vector<double> weights)
      : nodes_(std::move(nodes)), weights_(std::move(weights)) {}

  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline constexpr std::size_t kMinQuadratureNodes = 8193;

/// max(8193, 4n+1), rounded up to odd.
std::size_t default_node_count(std::size_t sample_count);

}  // namespace krrlab
