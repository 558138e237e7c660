#pragma once

// Coefficients of the semilinear equation
//   dX = [-A X + f(t, X)] dt + g(t) dW
// together with the assumption checker and the derived constants.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rps/spectral.hpp"

namespace rps {

/// Scalar tau-periodic time profile.
struct PeriodicProfile {
  enum class Shape { Sine, Constant };
  Shape shape = Shape::Sine;
  double period = 1.0;

  /// sin(2 pi t / period) or 1.
  double operator()(double t) const noexcept;
  /// Global Lipschitz constant of the profile.
  double lipschitz() const noexcept;
  /// sup |profile(t)|.
  double sup_abs() const noexcept { return 1.0; }
};

enum class DriftFamily { Affine, ModeDiagonalTanh };

/// f(t,u)_i = -c u_i + a tanh(u_i) + b beta(t) [i == forcing_mode].
struct DriftSpec {
  DriftFamily family = DriftFamily::Affine;
  double dissipation = 1.0;  ///< c > 0
  double gain = 0.0;         ///< a >= 0, ignored for the affine family
  double forcing = 0.0;      ///< b
  PeriodicProfile profile{};
  std::size_t forcing_mode = 1;

  double effective_gain() const noexcept { return family == DriftFamily::Affine ? 0.0 : gain; }
  double lipschitz_constant() const noexcept { return dissipation + effective_gain(); }
  double dissipativity_constant() const noexcept { return dissipation - effective_gain(); }
  /// Time-Hoelder constant |b| 2pi/tau sqrt(tau) (for a sine profile).
  double holder_constant() const noexcept;
};

/// g(t) e_i = rho(t) gamma_i with gamma_i = sigma lambda_i^{-q} and
/// rho(t) = 1 + epsilon * profile(t).
struct NoiseSpec {
  double sigma = 1.0;
  double decay = 0.26;  ///< q
  double epsilon = 0.0;
  PeriodicProfile profile{};

  double time_factor(double t) const noexcept { return 1.0 + epsilon * profile(t); }
  double mode_amplitude(const SpectralOperator& op, std::size_t i) const;
  /// sigma^2 sum_i lambda_i^{-2q} over the whole operator (finite table or
  /// the full Dirichlet series). Infinite when the series diverges.
  double trace(const SpectralOperator& op) const;
};

enum class InitialFamily { Zero, SingleMode, HrRandom };

struct InitialData {
  InitialFamily family = InitialFamily::Zero;
  std::size_t mode = 1;      ///< SingleMode
  double value = 0.0;        ///< SingleMode
  double amplitude = 1.0;    ///< HrRandom scale
  double extra_decay = 0.01; ///< HrRandom: coefficient ~ lambda_i^{-(r+1)/2 - extra_decay}
};

struct ModelSpec {
  SpectralOperator op = SpectralOperator::dirichlet_laplacian();
  DriftSpec drift{};
  NoiseSpec noise{};
  double period = 1.0;  ///< tau
  InitialData initial{};
  double regularity = 1.0;  ///< r
  std::optional<double> alpha;  ///< semigroup decay exponent; defaults to lambda_1

  double alpha_or_default() const { return alpha.value_or(op.eigenvalue(1)); }
  bool affine() const noexcept { return drift.family == DriftFamily::Affine; }

  /// Stable text rendering of every field; hashed into provenance tags.
  std::string canonical_text() const;
};

/// Model with the drift/noise profiles bound to the model period.
ModelSpec with_period(ModelSpec m, double period);

/// f(t, u), entrywise.
Coeffs drift_eval(const DriftSpec& d, double t, std::span<const double> u);

/// rho(t) gamma_i.
double noise_amplitude(const NoiseSpec& nspec, const SpectralOperator& op, double t, std::size_t i);

/// ||f(0,0)|| + C_f^lip (1 + sqrt(tau)).
double growth_constant(const ModelSpec& m);

/// (1 + epsilon) sqrt(trace).
double noise_bound(const ModelSpec& m);

/// E||xi||^2 for the configured initial family (full series).
double initial_second_moment(const ModelSpec& m);

/// E||A^{r/2} xi||^2 for the configured initial family (full series).
double initial_hr_second_moment(const ModelSpec& m);

/// Same moments truncated to the first n modes.
double initial_hr_second_moment(const ModelSpec& m, std::size_t n);

/// P_n xi for the seed; mode i depends only on (seed, i), so truncations nest.
GalerkinState make_initial(const ModelSpec& m, std::size_t n, std::uint64_t seed,
                           std::int64_t time_index = 0);

struct ValidationCheck {
  std::string name;
  std::string relation;
  std::vector<std::pair<std::string, double>> values;
  bool passed = false;
  /// Failing advisory checks are reported but do not fail the report.
  bool required = true;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  double growth_constant = 0.0;   ///< C_f hat
  double lipschitz = 0.0;         ///< C_f^lip
  double dissipativity = 0.0;     ///< C_f^dis
  double noise_bound = 0.0;       ///< C_g
  double one_step_constant = 0.0; ///< C_n
  double suggested_max_h = 0.0;
  double mean_square_bound = 0.0; ///< C_xi^2 + 2(C_f hat C_f + C_f hat + C_g^2)/(2 lambda_1 - C_f hat)

  bool passed() const noexcept;
  const ValidationCheck* find(std::string_view prefix) const noexcept;
  std::vector<const ValidationCheck*> failures() const;
};

enum class SchemeVariant { Implicit, Explicit };

/// Evaluates every structural assumption plus the stepsize conditions for
/// truncation n and stepsize h. Never throws for a well-formed model; a
/// failing relation is recorded in the report. Throws ConfigError only on
/// n == 0 or h <= 0.
ValidationReport validate(const ModelSpec& m, std::size_t n, double h,
                          SchemeVariant variant = SchemeVariant::Implicit);

}  // namespace rps
