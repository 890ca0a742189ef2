#pragma once

#include <span>

namespace tmis {

/// Recursive pairwise summation. The association order depends only on the
/// length, so equal inputs give bitwise-equal sums.
double pairwise_sum(std::span<const double> xs) noexcept;

/// Least-squares slope of log(y) against log(x). Requires at least two
/// points with positive coordinates; returns NaN otherwise.
double log_log_slope(std::span<const double> xs, std::span<const double> ys) noexcept;

}  // namespace tmis
