#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "keyscore/errors.hpp"

namespace keyscore {

/// Linear-interpolation quantile of sorted data (numpy's default rule).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

/// Bin edges lo, lo+w, ..., hi. When 1/w is an integer the edges are formed
/// by exact division so that 1.2 lands on the edge 12/10 rather than on
/// 1 + 2*0.1.
inline std::vector<double> bin_edges(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) throw ValidationError("bin range must be non-empty with positive width");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / width));
  if (n == 0) throw ValidationError("bin width exceeds range");
  std::vector<double> edges(n + 1);
  const double per_unit = 1.0 / width;
  const bool integral = std::abs(per_unit - std::round(per_unit)) < 1e-9;
  const double lo_units = lo * std::round(per_unit);
  const bool lo_integral = std::abs(lo_units - std::round(lo_units)) < 1e-9;
  for (std::size_t i = 0; i <= n; ++i) {
    if (integral && lo_integral)
      edges[i] = (std::round(lo_units) + static_cast<double>(i)) / std::round(per_unit);
    else
      edges[i] = lo + static_cast<double>(i) * width;
  }
  edges[n] = hi;
  return edges;
}

/// Index of the half-open bin [edges[i], edges[i+1]) holding x. The last
/// bin is closed. Values outside the range return nullopt.
inline std::optional<std::size_t> find_bin(std::span<const double> edges, double x) {
  if (edges.size() < 2 || x < edges.front() || x > edges.back()) return std::nullopt;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto idx = static_cast<std::size_t>(it - edges.begin());
  if (idx == 0) return std::nullopt;
  return std::min(idx - 1, edges.size() - 2);
}

}  // namespace keyscore
