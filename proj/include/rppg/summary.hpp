#pragma once

#include <span>

namespace rppg {

/// Mean with a normal-approximation 95% half-width, 1.96 * s / sqrt(n), where
/// s is the sample standard deviation (0 for a single value).
struct MeanCi {
  double mean = 0;
  double ci95 = 0;
};

inline constexpr double kCiZ = 1.96;

MeanCi mean_ci(std::span<const double> values);

}  // namespace rppg
