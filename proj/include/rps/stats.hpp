#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rps {

/// Sample mean with a 95% normal-approximation half-width
/// 1.96 * sd / sqrt(N). Empty input gives count 0 and zeros.
struct MeanEstimate {
  double mean = 0.0;
  double half_width = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};

MeanEstimate estimate_mean(std::span<const double> values);

/// Ordinary least squares y = slope * x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Needs at least two points with distinct x; throws std::invalid_argument
/// otherwise.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Runs task(s) for s = 0..samples-1 on `workers` threads and returns the
/// results in sample order, so any reduction over them is independent of
/// scheduling. The first exception thrown by a task is rethrown.
std::vector<std::vector<double>> run_samples(std::size_t samples, unsigned workers,
                                             const std::function<std::vector<double>(std::size_t)>& task);

}  // namespace rps
