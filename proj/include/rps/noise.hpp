#pragma once

// Index-addressable Brownian increments. Every draw is a pure function of
// (seed, stream, mode, index), so a fixed omega can be extended arbitrarily
// far into the past and the Wiener shift theta_tau is an index offset.

#include <cstddef>
#include <cstdint>
#include <utility>

#include "rps/hashing.hpp"

namespace rps {

/// Independent uniform/normal families sharing one seed.
enum class Stream : std::uint64_t {
  Increment = 0,    ///< Brownian increments
  Convolution = 1,  ///< second component of the coupled convolution pair
  Initial = 2,      ///< initial data
};

/// Uniform on (0,1) from a keyed counter hash; never returns 0 or 1.
double keyed_uniform(std::uint64_t seed, Stream stream, std::uint64_t mode, std::int64_t index) noexcept;

/// Standard normal quantile Phi^{-1}(u), u in (0,1).
double normal_quantile(double u);

/// Phi^{-1}(keyed_uniform(...)).
double keyed_normal(std::uint64_t seed, Stream stream, std::uint64_t mode, std::int64_t index);

/// Seed of Monte Carlo sample s: seed xor mix64(s). Part of the
/// reproducibility contract.
constexpr std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t sample) noexcept {
  return seed ^ mix64(sample);
}

/// Increments on the grid {j h : j in Z} with tau = m h.
///
/// A grid may be a coarsening of a finer base grid: with aggregation R the
/// increment over [jh, (j+1)h) is the sum of R base increments of size h/R,
/// so grids built from one seed with different R see the same Brownian path.
class NoiseGrid {
 public:
  /// Throws ConfigError unless tau / h is an integer m >= 1 (relative
  /// tolerance 1e-9); h is then normalized to tau / m.
  NoiseGrid(std::uint64_t seed, double tau, double h, std::size_t modes, std::size_t aggregation = 1);

  /// Exact construction from the number of steps per period.
  static NoiseGrid with_steps(std::uint64_t seed, double tau, std::int64_t steps_per_period,
                              std::size_t modes, std::size_t aggregation = 1);

  std::uint64_t seed() const noexcept { return seed_; }
  double tau() const noexcept { return tau_; }
  double h() const noexcept { return h_; }
  std::int64_t m() const noexcept { return m_; }
  std::size_t modes() const noexcept { return modes_; }
  std::size_t aggregation() const noexcept { return aggregation_; }
  std::int64_t shift_count() const noexcept { return shift_; }

  /// Delta W_i over [jh, (j+1)h), 1 <= i <= modes. Throws std::out_of_range
  /// for a bad mode.
  double increment(std::size_t i, std::int64_t j) const;

  /// The same path seen through theta_{k tau}: increment(i, j) of the result
  /// equals increment(i, j + k m) of *this.
  NoiseGrid shifted(std::int64_t k = 1) const;

  /// Grid with step h * factor over the same Brownian path.
  NoiseGrid coarsened(std::size_t factor) const;

  /// Base grid increment: sqrt(h_base) Phi^{-1}(u(seed, i, j_base)).
  double base_increment(std::size_t i, std::int64_t j_base) const;
  /// Standard normal behind the conditional second component at a base index.
  double base_auxiliary(std::size_t i, std::int64_t j_base) const;

 private:
  NoiseGrid(std::uint64_t seed, double tau, std::int64_t m, std::size_t modes, std::size_t aggregation,
            std::int64_t shift);
  void check_mode(std::size_t i) const;

  std::uint64_t seed_;
  double tau_;
  std::int64_t m_;
  double h_;
  double base_sqrt_h_;
  std::size_t modes_;
  std::size_t aggregation_;
  std::int64_t shift_;
};

/// increment(grid, i, j + m): the theta_tau-shifted path.
double shift_theta(const NoiseGrid& grid, std::size_t i, std::int64_t j);

/// Moments of the pair (Delta W, int_0^h e^{-lambda (h-s)} dW(s)).
struct PairMoments {
  double var_increment;    ///< h
  double var_convolution;  ///< (1 - e^{-2 lambda h}) / (2 lambda)
  double covariance;       ///< (1 - e^{-lambda h}) / lambda
  /// var_convolution - covariance^2 / h, evaluated without cancellation.
  double conditional_variance;
};

PairMoments convolution_pair_moments(double lambda, double h);

/// (Delta W_{i,j}, Z) with Z the exact stochastic convolution over the step
/// at decay lambda, sampled conditionally on Delta W. Requires aggregation 1.
std::pair<double, double> coupled_convolution_pair(const NoiseGrid& grid, std::size_t i, std::int64_t j,
                                                   double lambda);

/// General form: Z = (cov / h) Delta W + sqrt(conditional_variance) N, with
/// N independent of Delta W and keyed by (seed, i, j).
std::pair<double, double> coupled_gaussian_pair(const NoiseGrid& grid, std::size_t i, std::int64_t j,
                                                double covariance, double conditional_variance);

}  // namespace rps
