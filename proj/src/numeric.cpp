#include "tmis/numeric.hpp"

#include <cmath>
#include <limits>

namespace tmis {

double pairwise_sum(std::span<const double> xs) noexcept {
  if (xs.size() <= 8) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double log_log_slope(std::span<const double> xs, std::span<const double> ys) noexcept {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (xs.size() != ys.size() || xs.size() < 2) return nan;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) return nan;
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : nan;
}

}  // namespace tmis
