#pragma once

// Diagonal calculus for a self-adjoint, positive definite operator A with
// compact inverse. Every quantity is expressed in the eigenbasis (e_i), so a
// state is just the vector of its coefficients against e_1..e_n.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace rps {

using Coeffs = std::vector<double>;

enum class OperatorKind {
  DirichletLaplacian,  ///< -d^2/dx^2 on (0,1) with Dirichlet conditions
  Table,               ///< user supplied eigenvalue table
};

class SpectralOperator {
 public:
  /// A = -d^2/dx^2 on (0,1); eigenvalue(i) = i^2 pi^2.
  static SpectralOperator dirichlet_laplacian();

  /// Custom operator from its leading eigenvalues. Throws ConfigError unless
  /// the table is non-empty, finite, positive, nondecreasing and eventually
  /// growing (last > first).
  static SpectralOperator from_table(std::vector<double> eigenvalues);

  OperatorKind kind() const noexcept { return kind_; }

  /// 1-based. Throws std::out_of_range past the end of a table.
  double eigenvalue(std::size_t i) const;

  /// lambda_1 .. lambda_n.
  std::vector<double> eigenvalues(std::size_t n) const;

  /// Largest admissible truncation (unbounded for the Dirichlet family).
  std::size_t max_modes() const noexcept {
    return kind_ == OperatorKind::Table ? table_.size()
                                        : std::numeric_limits<std::size_t>::max();
  }

  const std::vector<double>& table() const noexcept { return table_; }

 private:
  explicit SpectralOperator(OperatorKind kind, std::vector<double> table = {})
      : kind_(kind), table_(std::move(table)) {}

  OperatorKind kind_;
  std::vector<double> table_;
};

/// Coefficients against e_1..e_n at absolute time time_index * h.
struct GalerkinState {
  Coeffs coeffs;
  std::int64_t time_index = 0;

  std::size_t size() const noexcept { return coeffs.size(); }
  bool finite() const noexcept;
  friend bool operator==(const GalerkinState&, const GalerkinState&) = default;
};

/// S(t)v, i.e. entry i scaled by exp(-lambda_i t). Throws on t < 0.
Coeffs semigroup_apply(const SpectralOperator& op, double t, std::span<const double> v);

/// A^rho v, entry i scaled by lambda_i^rho. Callers pass rho = r/2.
Coeffs fractional_apply(const SpectralOperator& op, double rho, std::span<const double> v);

/// ||A^{r/2} v|| = sqrt(sum lambda_i^r v_i^2).
double hr_norm(const SpectralOperator& op, double r, std::span<const double> v);

/// Orthogonal projection onto span(e_1..e_n): keeps the first min(n, len)
/// entries.
Coeffs project(std::span<const double> v, std::size_t n);

double euclidean_norm(std::span<const double> v) noexcept;

struct SmoothingConstants {
  double c1;  ///< sup_{x>0} x^{-nu} (1 - e^{-x})
  double c2;  ///< sup_{x>0} x^{mu} e^{-x} = (mu/e)^mu
};

/// Sharp constants for the diagonal case of
///   ||A^{-nu}(S(t) - Id)|| <= C1(nu) t^nu   and   ||A^mu S(t)|| <= C2(mu) t^{-mu}.
/// nu in [0,1], mu >= 0; anything else throws std::invalid_argument.
SmoothingConstants smoothing_constants(double nu, double mu);

/// Gamma(nu) for nu > 0.
double gamma_eval(double nu);

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kPiSquared = kPi * kPi;

}  // namespace rps
