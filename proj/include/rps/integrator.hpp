#pragma once

// Discrete exponential integrator for the spectral Galerkin system
//
//   X_{j+1} = S(h) ( X_j + h f(t_{j+1}, X_{j+1}) + g(t_j) dW_j )   (implicit)
//   X_{j+1} = S(h) ( X_j + h f(t_j, X_j)         + g(t_j) dW_j )   (explicit)
//
// and the exact transition of the affine model used as its oracle.
//
// Time arguments enter f and g only through their phase j mod m, so a run
// on theta_tau-shifted noise is bit-identical to the base run shifted by m
// steps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rps/model.hpp"
#include "rps/noise.hpp"
#include "rps/spectral.hpp"

namespace rps {

struct SchemeConfig {
  SchemeVariant variant = SchemeVariant::Implicit;
  double h = 1.0 / 64.0;
  std::size_t n = 16;
  double tolerance = 1e-12;
  int max_iterations = 100;
};

struct Provenance {
  std::string model_hash;
  std::uint64_t seed = 0;
  std::string variant;  ///< "implicit", "explicit" or "exact"
};

struct PathSlice {
  std::vector<GalerkinState> states;
  Provenance provenance;
};

const char* to_string(SchemeVariant v) noexcept;

/// Precomputed stepper for one (scheme, model, noise grid) triple.
class Integrator {
 public:
  /// Throws ConfigError if the grid stepsize differs from cfg.h, if n exceeds
  /// the grid or operator modes, or if the implicit contraction factor
  /// h C_f^lip exp(-lambda_1 h) is not below 1.
  Integrator(const SchemeConfig& cfg, const ModelSpec& model, const NoiseGrid& grid);

  /// Copy driven by another grid with the same tau and m (e.g. the grid of
  /// another Monte Carlo sample); the precomputed tables are reused.
  Integrator rebind(const NoiseGrid& grid) const;

  const SchemeConfig& config() const noexcept { return cfg_; }
  const NoiseGrid& grid() const noexcept { return grid_; }
  std::size_t modes() const noexcept { return cfg_.n; }

  /// One step from index j to j + 1, in place. Throws NumericalError when
  /// the fixed point iteration does not converge or the result is not finite.
  void step_in_place(std::span<double> x, std::int64_t j);

  /// Same step with the increments dW_{i,j}, i = 1..n, supplied by the
  /// caller; several states can then share one draw.
  void step_with_increments(std::span<double> x, std::int64_t j, std::span<const double> dw);

  /// Fills dw[0..n) with grid().increment(i, j).
  void increments_into(std::int64_t j, std::span<double> dw) const;

  GalerkinState step(const GalerkinState& x);

  /// Folds step from x.time_index up to j_end, keeping only the final state.
  GalerkinState advance(GalerkinState x, std::int64_t j_end);

  /// Same fold, keeping every intermediate state.
  PathSlice simulate(const GalerkinState& x0, std::int64_t j_end);

  /// ||y - S(h)(x + h f(t_{j+1}, y) + g(t_j) dW_j)|| for the implicit map.
  double implicit_residual(std::span<const double> x, std::int64_t j, std::span<const double> y) const;

  /// Fixed point iterations used by the last implicit step.
  int last_iterations() const noexcept { return last_iterations_; }

  Provenance provenance() const;

 private:
  std::int64_t phase(std::int64_t j) const noexcept;
  void drift_into(std::span<const double> u, double forcing_value, std::span<double> out) const;

  SchemeConfig cfg_;
  ModelSpec model_;
  NoiseGrid grid_;
  std::vector<double> decay_;      ///< exp(-lambda_i h)
  std::vector<double> amplitude_;  ///< gamma_i
  std::vector<double> rho_;        ///< rho(p h), p = 0..m-1
  std::vector<double> beta_;       ///< beta(p h)
  std::vector<double> w_, dw_, y_, f_;
  int last_iterations_ = 0;
};

GalerkinState step(const SchemeConfig& cfg, const ModelSpec& model, const NoiseGrid& grid, const GalerkinState& x);

PathSlice simulate(const SchemeConfig& cfg, const ModelSpec& model, const NoiseGrid& grid, const GalerkinState& x0,
                   std::int64_t j_end);

/// Exact per-mode Ornstein-Uhlenbeck transition of the affine model with
/// effective rate lambda_i + c, driven by the same increments the scheme
/// consumes on `grid` (which must have aggregation 1).
class AffineOracle {
 public:
  /// Throws ConfigError for a non-affine drift.
  AffineOracle(const ModelSpec& model, const NoiseGrid& grid, std::size_t n);

  /// Copy driven by another base grid with the same tau and m; skips the
  /// quadratures.
  AffineOracle rebind(const NoiseGrid& grid) const;

  void step_in_place(std::span<double> x, std::int64_t j) const;
  GalerkinState advance(GalerkinState x, std::int64_t j_end) const;
  PathSlice simulate(const GalerkinState& x0, std::int64_t j_end) const;

  /// Deterministic forcing contribution of mode i (1-based) over the step
  /// starting at phase p.
  double forcing_increment(std::size_t i, std::int64_t p) const;

  Provenance provenance() const;

 private:
  std::int64_t phase(std::int64_t j) const noexcept;

  ModelSpec model_;
  NoiseGrid grid_;
  std::size_t n_;
  std::vector<double> decay_;      ///< exp(-(lambda_i + c) h)
  std::vector<double> forcing_;    ///< D at the forcing mode, per phase
  std::vector<double> cov_;        ///< [p * n + i] Cov(Z, dW) including gamma_i
  std::vector<double> cond_var_;   ///< [p * n + i] Var(Z | dW)
  std::vector<double> rate_;       ///< lambda_i + c
  bool frozen_noise_ = false;      ///< rho constant: use coupled_convolution_pair directly
  double rho_const_ = 1.0;
  std::vector<double> amplitude_;
};

PathSlice exact_affine_path(const ModelSpec& model, const NoiseGrid& grid, const GalerkinState& x0,
                            std::int64_t j_end);

}  // namespace rps
