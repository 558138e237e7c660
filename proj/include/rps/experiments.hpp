#pragma once

// Monte Carlo experiments on pathwise-coupled runs: pull-back convergence,
// random periodicity and strong convergence rates in h and n.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rps/integrator.hpp"
#include "rps/model.hpp"
#include "rps/stats.hpp"

namespace rps {

struct MonteCarlo {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct GapRow {
  int k = 0;
  double estimate = 0.0;
  double half_width = 0.0;
};

struct PullbackReport {
  double t = 0.0;
  std::vector<GapRow> rows;
  /// ln(estimate) against k over rows above the round-off floor.
  LinearFit fit;
  /// -fit.slope; NaN when fewer than two rows are above the floor.
  double decay_rate = 0.0;
  /// Mean of ||X_t||^2 over the samples (k = smallest), sets the floor.
  double state_second_moment = 0.0;
};

struct PeriodicityReport {
  double t = 0.0;
  std::vector<GapRow> rows;
  /// Same log-linear fit and floor as the pull-back report.
  LinearFit fit;
  double decay_rate = 0.0;
  double state_second_moment = 0.0;
};

struct RateRow {
  double value = 0.0;
  double error = 0.0;
  double half_width = 0.0;
};

struct RateReport {
  std::string sweep;      ///< "h" or "n"
  std::string reference;  ///< how the reference solution was produced
  double t = 0.0;
  std::vector<RateRow> rows;
  /// log(error) against log(value), over rows with positive error.
  LinearFit fit;
  /// Spatial sweeps only: slope of log(error) against log(lambda_n).
  double slope_vs_log_lambda = 0.0;
  /// Every error below 1e-12: the slope is meaningless and left at 0.
  bool degenerate = false;
};

/// Relative floor below which pull-back gaps are treated as round-off.
inline constexpr double kGapFloor = 1e-24;

/// For each k, runs started at -(k+1) tau and -k tau from the same xi on the
/// same noise, and averages ||gap at t||^2. t must be a grid time, k >= 0,
/// k_list strictly increasing. Throws ConfigError when the validator fails.
PullbackReport pullback_experiment(const ModelSpec& m, const SchemeConfig& cfg, double t,
                                   const std::vector<int>& k_list, const MonteCarlo& mc);

/// For each k, ||X^{-k tau}_{t+tau}(omega) - X^{-k tau}_t(theta_tau omega)||^2.
/// Same preconditions and validator gate as the pull-back.
PeriodicityReport periodicity_experiment(const ModelSpec& m, const SchemeConfig& cfg, double t,
                                         const std::vector<int>& k_list, const MonteCarlo& mc);

/// Strong error at t of runs started at -k tau, one per h in h_list, all on
/// coarsenings of the grid at min(h_list). The reference is the exact
/// transition for the affine family and the scheme at min(h)/4 otherwise.
/// cfg supplies variant, n and the solver tolerances; cfg.h is ignored.
/// Not gated on the validator, so f = 0 runs (reported as degenerate).
RateReport temporal_rate_experiment(const ModelSpec& m, const SchemeConfig& cfg, const std::vector<double>& h_list,
                                    double t, int k, const MonteCarlo& mc);

/// Strong error at t of the n-mode scheme against the n_ref-mode scheme at
/// the same h and on the same noise. cfg.n is ignored.
RateReport spatial_rate_experiment(const ModelSpec& m, const SchemeConfig& cfg, const std::vector<std::size_t>& n_list,
                                   std::size_t n_ref, double t, int k, const MonteCarlo& mc);

/// Index of grid time t on a grid of step h; throws ConfigError otherwise.
std::int64_t grid_index(double t, double h);

}  // namespace rps
