#include "rps/noise.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rps/errors.hpp"

namespace rps {

double keyed_uniform(std::uint64_t seed, Stream stream, std::uint64_t mode, std::int64_t index) noexcept {
  std::uint64_t h = mix64(seed ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(stream) + 1)));
  h = mix64(h ^ (mode * 0xa0761d6478bd642fULL));
  h = mix64(h ^ static_cast<std::uint64_t>(index));
  // 53 random bits, centered in their cell: strictly inside (0,1).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double normal_quantile(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double keyed_normal(std::uint64_t seed, Stream stream, std::uint64_t mode, std::int64_t index) {
  return normal_quantile(keyed_uniform(seed, stream, mode, index));
}

NoiseGrid::NoiseGrid(std::uint64_t seed, double tau, std::int64_t m, std::size_t modes, std::size_t aggregation,
                     std::int64_t shift)
    : seed_(seed),
      tau_(tau),
      m_(m),
      h_(tau / static_cast<double>(m)),
      base_sqrt_h_(std::sqrt(h_ / static_cast<double>(aggregation))),
      modes_(modes),
      aggregation_(aggregation),
      shift_(shift) {}

namespace {

std::int64_t steps_for(double tau, double h) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("period: tau must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h: stepsize must be positive");
  const double ratio = tau / h;
  const double m = std::round(ratio);
  if (m < 1.0 || std::abs(ratio - m) > 1e-9 * ratio) {
    throw ConfigError("h: period tau must be an integer multiple of h (tau/h = " + std::to_string(ratio) + ")");
  }
  return static_cast<std::int64_t>(m);
}

}  // namespace

NoiseGrid::NoiseGrid(std::uint64_t seed, double tau, double h, std::size_t modes, std::size_t aggregation)
    : NoiseGrid(with_steps(seed, tau, steps_for(tau, h), modes, aggregation)) {}

NoiseGrid NoiseGrid::with_steps(std::uint64_t seed, double tau, std::int64_t steps_per_period, std::size_t modes,
                                std::size_t aggregation) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("period: tau must be positive");
  if (steps_per_period < 1) throw ConfigError("steps per period must be at least 1");
  if (modes == 0) throw ConfigError("noise grid needs at least one mode");
  if (aggregation == 0) throw ConfigError("aggregation factor must be at least 1");
  return NoiseGrid(seed, tau, steps_per_period, modes, aggregation, 0);
}

void NoiseGrid::check_mode(std::size_t i) const {
  if (i == 0 || i > modes_) {
    throw std::out_of_range("noise mode " + std::to_string(i) + " outside 1.." + std::to_string(modes_));
  }
}

double NoiseGrid::base_increment(std::size_t i, std::int64_t j_base) const {
  check_mode(i);
  return base_sqrt_h_ * keyed_normal(seed_, Stream::Increment, i, j_base);
}

double NoiseGrid::base_auxiliary(std::size_t i, std::int64_t j_base) const {
  check_mode(i);
  return keyed_normal(seed_, Stream::Convolution, i, j_base);
}

double NoiseGrid::increment(std::size_t i, std::int64_t j) const {
  const auto r = static_cast<std::int64_t>(aggregation_);
  const std::int64_t first = (j + shift_ * m_) * r;
  if (r == 1) return base_increment(i, first);
  double acc = 0.0;
  for (std::int64_t l = 0; l < r; ++l) acc += base_increment(i, first + l);
  return acc;
}

NoiseGrid NoiseGrid::shifted(std::int64_t k) const {
  return NoiseGrid(seed_, tau_, m_, modes_, aggregation_, shift_ + k);
}

NoiseGrid NoiseGrid::coarsened(std::size_t factor) const {
  if (factor == 0) throw ConfigError("coarsening factor must be at least 1");
  if (m_ % static_cast<std::int64_t>(factor) != 0) {
    throw ConfigError("coarsening factor " + std::to_string(factor) + " does not divide steps per period " +
                      std::to_string(m_));
  }
  return NoiseGrid(seed_, tau_, m_ / static_cast<std::int64_t>(factor), modes_, aggregation_ * factor, shift_);
}

double shift_theta(const NoiseGrid& grid, std::size_t i, std::int64_t j) {
  return grid.increment(i, j + grid.m());
}

PairMoments convolution_pair_moments(double lambda, double h) {
  if (!(lambda > 0.0)) throw std::invalid_argument("convolution pair: decay must be positive");
  const double x = lambda * h;
  PairMoments out{};
  out.var_increment = h;
  out.var_convolution = -std::expm1(-2.0 * x) / (2.0 * lambda);
  out.covariance = -std::expm1(-x) / lambda;
  if (x < 1e-2) {
    const double x2 = x * x;
    out.conditional_variance =
        h * x2 * (1.0 / 12.0 - x / 12.0 + 17.0 * x2 / 360.0 - 7.0 * x2 * x / 360.0 + 43.0 * x2 * x2 / 6720.0);
  } else {
    out.conditional_variance = std::max(0.0, out.var_convolution - out.covariance * out.covariance / h);
  }
  return out;
}

std::pair<double, double> coupled_gaussian_pair(const NoiseGrid& grid, std::size_t i, std::int64_t j,
                                                double covariance, double conditional_variance) {
  if (grid.aggregation() != 1) {
    throw std::logic_error("coupled pairs are defined on the base grid only");
  }
  const std::int64_t jb = j + grid.shift_count() * grid.m();
  const double dw = grid.base_increment(i, jb);
  const double z = covariance / grid.h() * dw + std::sqrt(std::max(0.0, conditional_variance)) *
                                                    grid.base_auxiliary(i, jb);
  return {dw, z};
}

std::pair<double, double> coupled_convolution_pair(const NoiseGrid& grid, std::size_t i, std::int64_t j,
                                                   double lambda) {
  const PairMoments mom = convolution_pair_moments(lambda, grid.h());
  return coupled_gaussian_pair(grid, i, j, mom.covariance, mom.conditional_variance);
}

}  // namespace rps
