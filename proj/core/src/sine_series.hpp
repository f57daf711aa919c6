#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace krrlab::detail {

/// out[k] = amplitude * sin((first + k * step) * x).
///
/// Angle-addition rotation, re-anchored with exact sin/cos every kAnchor terms
/// so the accumulated rounding stays at a few ulps for any length.
inline void sine_series(double first, double step, double x, double amplitude, std::span<double> out) {
  constexpr std::size_t kAnchor = 32;
  const double delta = step * x;
  const double cd = std::cos(delta);
  const double sd = std::sin(delta);
  double s = 0.0;
  double c = 1.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k % kAnchor == 0) {
      const double angle = (first + static_cast<double>(k) * step) * x;
      s = std::sin(angle);
      c = std::cos(angle);
    } else {
      const double next_s = s * cd + c * sd;
      c = c * cd - s * sd;
      s = next_s;
    }
    out[k] = amplitude * s;
  }
}

}  // namespace krrlab::detail
