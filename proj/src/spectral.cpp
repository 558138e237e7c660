#include "rps/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rps/errors.hpp"

namespace rps {

SpectralOperator SpectralOperator::dirichlet_laplacian() {
  return SpectralOperator(OperatorKind::DirichletLaplacian);
}

SpectralOperator SpectralOperator::from_table(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) throw ConfigError("operator.eigenvalues: table is empty");
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    const double lam = eigenvalues[i];
    if (!std::isfinite(lam) || lam <= 0.0) {
      throw ConfigError("operator.eigenvalues[" + std::to_string(i) +
                        "]: eigenvalues must be finite and positive");
    }
    if (i > 0 && lam < eigenvalues[i - 1]) {
      throw ConfigError("operator.eigenvalues[" + std::to_string(i) +
                        "]: eigenvalues must be nondecreasing");
    }
  }
  if (eigenvalues.size() > 1 && !(eigenvalues.back() > eigenvalues.front())) {
    throw ConfigError("operator.eigenvalues: table never grows (last == first)");
  }
  return SpectralOperator(OperatorKind::Table, std::move(eigenvalues));
}

double SpectralOperator::eigenvalue(std::size_t i) const {
  if (i == 0) throw std::out_of_range("eigenvalue index is 1-based");
  if (kind_ == OperatorKind::Table) {
    if (i > table_.size()) {
      throw std::out_of_range("eigenvalue index " + std::to_string(i) +
                              " exceeds table size " + std::to_string(table_.size()));
    }
    return table_[i - 1];
  }
  const auto k = static_cast<double>(i);
  return k * k * kPiSquared;
}

std::vector<double> SpectralOperator::eigenvalues(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = eigenvalue(i + 1);
  return out;
}

bool GalerkinState::finite() const noexcept {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double x) { return std::isfinite(x); });
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

}  // namespace

Coeffs semigroup_apply(const SpectralOperator& op, double t, std::span<const double> v) {
  if (!(t >= 0.0)) throw std::invalid_argument("semigroup_apply: t must be nonnegative");
  require_finite(v, "semigroup_apply");
  Coeffs out(v.begin(), v.end());
  if (t == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(-op.eigenvalue(i + 1) * t);
  return out;
}

Coeffs fractional_apply(const SpectralOperator& op, double rho, std::span<const double> v) {
  if (!std::isfinite(rho)) throw std::invalid_argument("fractional_apply: non-finite exponent");
  require_finite(v, "fractional_apply");
  Coeffs out(v.begin(), v.end());
  if (rho == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::pow(op.eigenvalue(i + 1), rho);
  return out;
}

double hr_norm(const SpectralOperator& op, double r, std::span<const double> v) {
  require_finite(v, "hr_norm");
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = r == 0.0 ? 1.0 : std::pow(op.eigenvalue(i + 1), r);
    acc += w * v[i] * v[i];
  }
  return std::sqrt(acc);
}

Coeffs project(std::span<const double> v, std::size_t n) {
  if (n == 0) throw std::invalid_argument("project: n must be at least 1");
  const std::size_t keep = std::min(n, v.size());
  return Coeffs(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep));
}

double euclidean_norm(std::span<const double> v) noexcept {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

namespace {

// x^{-nu} (1 - e^{-x}) as a function of s = log x.
double c1_objective(double s, double nu) {
  const double x = std::exp(s);
  return std::exp(-nu * s) * -std::expm1(-x);
}

double maximize_c1(double nu) {
  constexpr double lo = -12.0 * std::numbers::ln10;
  constexpr double hi = 6.0 * std::numbers::ln10;
  constexpr int grid = 4096;
  const double ds = (hi - lo) / grid;

  int best = 0;
  double best_val = -1.0;
  for (int k = 0; k <= grid; ++k) {
    const double val = c1_objective(lo + k * ds, nu);
    if (val > best_val) {
      best_val = val;
      best = k;
    }
  }

  // Golden-section refinement on the bracketing cell pair.
  double a = lo + std::max(0, best - 1) * ds;
  double b = lo + std::min(grid, best + 1) * ds;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = c1_objective(x1, nu);
  double f2 = c1_objective(x2, nu);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = c1_objective(x2, nu);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = c1_objective(x1, nu);
    }
  }
  return std::max({best_val, f1, f2, c1_objective(0.5 * (a + b), nu)});
}

}  // namespace

SmoothingConstants smoothing_constants(double nu, double mu) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("smoothing_constants: nu must lie in [0,1]");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("smoothing_constants: mu must be >= 0");

  // The endpoints are limits (x -> infinity for nu = 0, x -> 0 for nu = 1).
  const double c1 = (nu == 0.0 || nu == 1.0) ? 1.0 : maximize_c1(nu);
  const double c2 = mu == 0.0 ? 1.0 : std::pow(mu / std::numbers::e, mu);
  return {c1, c2};
}

double gamma_eval(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("gamma_eval: nu must be positive");
  return std::tgamma(nu);
}

}  // namespace rps
