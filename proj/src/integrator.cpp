#include "rps/integrator.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "rps/errors.hpp"
#include "rps/hashing.hpp"

namespace rps {

const char* to_string(SchemeVariant v) noexcept {
  return v == SchemeVariant::Implicit ? "implicit" : "explicit";
}

namespace {

std::string model_hash(const ModelSpec& m) { return to_hex(fnv1a64(m.canonical_text())); }

std::int64_t wrap_phase(std::int64_t j, std::int64_t m) noexcept {
  const std::int64_t p = j % m;
  return p < 0 ? p + m : p;
}

// Fixed 20-point Gauss-Legendre on ceil(kappa h) + 1 equal panels. Used for
// integrands that vanish to leading order, where a relative stopping rule
// never triggers.
template <class F>
double composite_gauss(F f, double h, double kappa) {
  const int panels = static_cast<int>(std::ceil(kappa * h)) + 1;
  const double w = h / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    acc += boost::math::quadrature::gauss<double, 20>::integrate(f, p * w, (p + 1) * w);
  }
  return acc;
}

}  // namespace

Integrator::Integrator(const SchemeConfig& cfg, const ModelSpec& model, const NoiseGrid& grid)
    : cfg_(cfg), model_(model), grid_(grid) {
  if (cfg.n == 0) throw ConfigError("scheme.n: truncation must be at least 1");
  if (cfg.n > grid.modes()) {
    throw ConfigError("scheme.n: truncation " + std::to_string(cfg.n) + " exceeds noise grid modes " +
                      std::to_string(grid.modes()));
  }
  if (cfg.n > model.op.max_modes()) throw ConfigError("scheme.n: truncation exceeds the eigenvalue table");
  if (!(cfg.h > 0.0) || std::abs(cfg.h - grid.h()) > 1e-12 * grid.h()) {
    throw ConfigError("scheme.h: stepsize does not match the noise grid (h = " + std::to_string(cfg.h) +
                      ", grid h = " + std::to_string(grid.h()) + ")");
  }
  if (!(cfg.tolerance > 0.0)) throw ConfigError("scheme.tolerance: must be positive");
  if (cfg.max_iterations < 1) throw ConfigError("scheme.max_iterations: must be at least 1");
  cfg_.h = grid.h();

  const double h = cfg_.h;
  const double lam1 = model.op.eigenvalue(1);
  if (cfg.variant == SchemeVariant::Implicit) {
    const double factor = h * model.drift.lipschitz_constant() * std::exp(-lam1 * h);
    if (!(factor < 1.0)) {
      throw ConfigError("scheme.h: implicit contraction factor h C_f^lip exp(-lambda_1 h) = " +
                        std::to_string(factor) + " is not below 1");
    }
  }

  decay_.resize(cfg_.n);
  amplitude_.resize(cfg_.n);
  for (std::size_t i = 0; i < cfg_.n; ++i) {
    decay_[i] = std::exp(-model.op.eigenvalue(i + 1) * h);
    amplitude_[i] = model.noise.mode_amplitude(model.op, i + 1);
  }
  const std::int64_t m = grid.m();
  rho_.resize(static_cast<std::size_t>(m));
  beta_.resize(static_cast<std::size_t>(m));
  for (std::int64_t p = 0; p < m; ++p) {
    const double t = static_cast<double>(p) * h;
    rho_[static_cast<std::size_t>(p)] = model.noise.time_factor(t);
    beta_[static_cast<std::size_t>(p)] = model.drift.profile(t);
  }
  w_.resize(cfg_.n);
  dw_.resize(cfg_.n);
  y_.resize(cfg_.n);
  f_.resize(cfg_.n);
}

namespace {

void require_same_layout(const NoiseGrid& from, const NoiseGrid& to, std::size_t n) {
  if (to.m() != from.m() || to.tau() != from.tau() || to.aggregation() != from.aggregation() || to.modes() < n) {
    throw ConfigError("rebind: noise grid layout differs (tau, steps per period, aggregation or modes)");
  }
}

}  // namespace

Integrator Integrator::rebind(const NoiseGrid& grid) const {
  require_same_layout(grid_, grid, cfg_.n);
  Integrator out = *this;
  out.grid_ = grid;
  return out;
}

std::int64_t Integrator::phase(std::int64_t j) const noexcept { return wrap_phase(j, grid_.m()); }

void Integrator::drift_into(std::span<const double> u, double forcing_value, std::span<double> out) const {
  const DriftSpec& d = model_.drift;
  const double c = d.dissipation;
  const double a = d.effective_gain();
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = -c * u[i];
    if (a != 0.0) out[i] += a * std::tanh(u[i]);
  }
  if (forcing_value != 0.0 && d.forcing_mode >= 1 && d.forcing_mode <= u.size()) {
    out[d.forcing_mode - 1] += forcing_value;
  }
}

void Integrator::increments_into(std::int64_t j, std::span<double> dw) const {
  for (std::size_t i = 0; i < cfg_.n; ++i) dw[i] = grid_.increment(i + 1, j);
}

void Integrator::step_in_place(std::span<double> x, std::int64_t j) {
  increments_into(j, dw_);
  step_with_increments(x, j, dw_);
}

void Integrator::step_with_increments(std::span<double> x, std::int64_t j, std::span<const double> dw) {
  const std::size_t n = cfg_.n;
  const double h = cfg_.h;
  const double rho = rho_[static_cast<std::size_t>(phase(j))];
  for (std::size_t i = 0; i < n; ++i) w_[i] = x[i] + rho * amplitude_[i] * dw[i];

  if (cfg_.variant == SchemeVariant::Explicit) {
    drift_into(x, model_.drift.forcing * beta_[static_cast<std::size_t>(phase(j))], f_);
    for (std::size_t i = 0; i < n; ++i) x[i] = decay_[i] * (w_[i] + h * f_[i]);
    last_iterations_ = 0;
  } else {
    const double forcing = model_.drift.forcing * beta_[static_cast<std::size_t>(phase(j + 1))];
    for (std::size_t i = 0; i < n; ++i) y_[i] = decay_[i] * x[i];
    int it = 0;
    for (;;) {
      if (it == cfg_.max_iterations) {
        throw NumericalError("implicit step at index " + std::to_string(j) + " did not converge within " +
                             std::to_string(cfg_.max_iterations) + " iterations");
      }
      ++it;
      drift_into(y_, forcing, f_);
      double diff2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double next = decay_[i] * (w_[i] + h * f_[i]);
        const double d = next - y_[i];
        diff2 += d * d;
        y_[i] = next;
      }
      if (!std::isfinite(diff2)) {
        throw NumericalError("implicit step at index " + std::to_string(j) + " produced a non-finite iterate");
      }
      if (std::sqrt(diff2) <= cfg_.tolerance) break;
    }
    last_iterations_ = it;
    for (std::size_t i = 0; i < n; ++i) x[i] = y_[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) {
      throw NumericalError("non-finite state at index " + std::to_string(j + 1));
    }
  }
}

GalerkinState Integrator::step(const GalerkinState& x) {
  if (x.size() != cfg_.n) throw std::invalid_argument("step: state length differs from the truncation");
  GalerkinState y = x;
  step_in_place(y.coeffs, x.time_index);
  y.time_index = x.time_index + 1;
  return y;
}

GalerkinState Integrator::advance(GalerkinState x, std::int64_t j_end) {
  if (x.size() != cfg_.n) throw std::invalid_argument("advance: state length differs from the truncation");
  if (j_end < x.time_index) throw std::invalid_argument("advance: end index precedes the start index");
  for (std::int64_t j = x.time_index; j < j_end; ++j) step_in_place(x.coeffs, j);
  x.time_index = j_end;
  return x;
}

PathSlice Integrator::simulate(const GalerkinState& x0, std::int64_t j_end) {
  if (x0.size() != cfg_.n) throw std::invalid_argument("simulate: state length differs from the truncation");
  if (j_end < x0.time_index) throw std::invalid_argument("simulate: end index precedes the start index");
  PathSlice out{{}, provenance()};
  out.states.reserve(static_cast<std::size_t>(j_end - x0.time_index + 1));
  out.states.push_back(x0);
  GalerkinState x = x0;
  for (std::int64_t j = x0.time_index; j < j_end; ++j) {
    step_in_place(x.coeffs, j);
    x.time_index = j + 1;
    out.states.push_back(x);
  }
  return out;
}

double Integrator::implicit_residual(std::span<const double> x, std::int64_t j, std::span<const double> y) const {
  const std::size_t n = cfg_.n;
  const double rho = rho_[static_cast<std::size_t>(phase(j))];
  std::vector<double> f(n);
  drift_into(y, model_.drift.forcing * beta_[static_cast<std::size_t>(phase(j + 1))], f);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rhs = decay_[i] * (x[i] + cfg_.h * f[i] + rho * amplitude_[i] * grid_.increment(i + 1, j));
    acc += (y[i] - rhs) * (y[i] - rhs);
  }
  return std::sqrt(acc);
}

Provenance Integrator::provenance() const {
  return {model_hash(model_), grid_.seed(), to_string(cfg_.variant)};
}

GalerkinState step(const SchemeConfig& cfg, const ModelSpec& model, const NoiseGrid& grid, const GalerkinState& x) {
  Integrator integ(cfg, model, grid);
  return integ.step(x);
}

PathSlice simulate(const SchemeConfig& cfg, const ModelSpec& model, const NoiseGrid& grid, const GalerkinState& x0,
                   std::int64_t j_end) {
  Integrator integ(cfg, model, grid);
  return integ.simulate(x0, j_end);
}

// ---------------------------------------------------------------------------

AffineOracle::AffineOracle(const ModelSpec& model, const NoiseGrid& grid, std::size_t n)
    : model_(model), grid_(grid), n_(n) {
  if (!model.affine()) throw ConfigError("drift.family: the exact oracle requires the affine family");
  if (grid.aggregation() != 1) throw ConfigError("exact oracle needs a base (non-aggregated) noise grid");
  if (n == 0 || n > grid.modes()) throw ConfigError("exact oracle: truncation outside the noise grid");
  if (n > model.op.max_modes()) throw ConfigError("exact oracle: truncation exceeds the eigenvalue table");

  const double h = grid.h();
  const double c = model.drift.dissipation;
  const std::int64_t m = grid.m();
  decay_.resize(n);
  rate_.resize(n);
  amplitude_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rate_[i] = model.op.eigenvalue(i + 1) + c;
    decay_[i] = std::exp(-rate_[i] * h);
    amplitude_[i] = model.noise.mode_amplitude(model.op, i + 1);
  }

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double tol = 1e-12;
  constexpr unsigned depth = 20;

  forcing_.assign(static_cast<std::size_t>(m), 0.0);
  const std::size_t fm = model.drift.forcing_mode;
  if (model.drift.forcing != 0.0 && fm >= 1 && fm <= n) {
    const double kappa = rate_[fm - 1];
    for (std::int64_t p = 0; p < m; ++p) {
      const double tj = static_cast<double>(p) * h;
      auto integrand = [&](double s) { return std::exp(-kappa * (h - s)) * model.drift.profile(tj + s); };
      forcing_[static_cast<std::size_t>(p)] = model.drift.forcing * Quad::integrate(integrand, 0.0, h, depth, tol);
    }
  }

  const NoiseSpec& ns = model.noise;
  frozen_noise_ = ns.epsilon == 0.0 || ns.profile.shape == PeriodicProfile::Shape::Constant;
  rho_const_ = ns.time_factor(0.0);
  if (!frozen_noise_) {
    cov_.resize(static_cast<std::size_t>(m) * n);
    cond_var_.resize(static_cast<std::size_t>(m) * n);
    for (std::int64_t p = 0; p < m; ++p) {
      const double tj = static_cast<double>(p) * h;
      for (std::size_t i = 0; i < n; ++i) {
        const double kappa = rate_[i];
        const double gamma = amplitude_[i];
        auto kernel = [&](double s) { return gamma * std::exp(-kappa * (h - s)) * ns.time_factor(tj + s); };
        const double cov = Quad::integrate(kernel, 0.0, h, depth, tol);
        // Var(Z - (cov/h) dW) = int (kernel - cov/h)^2, free of cancellation.
        auto resid = [&](double s) {
          const double d = kernel(s) - cov / h;
          return d * d;
        };
        const double cond = composite_gauss(resid, h, kappa);
        cov_[static_cast<std::size_t>(p) * n + i] = cov;
        cond_var_[static_cast<std::size_t>(p) * n + i] = cond;
      }
    }
  }
}

AffineOracle AffineOracle::rebind(const NoiseGrid& grid) const {
  require_same_layout(grid_, grid, n_);
  AffineOracle out = *this;
  out.grid_ = grid;
  return out;
}

std::int64_t AffineOracle::phase(std::int64_t j) const noexcept { return wrap_phase(j, grid_.m()); }

double AffineOracle::forcing_increment(std::size_t i, std::int64_t p) const {
  if (i != model_.drift.forcing_mode) return 0.0;
  return forcing_.at(static_cast<std::size_t>(wrap_phase(p, grid_.m())));
}

void AffineOracle::step_in_place(std::span<double> x, std::int64_t j) const {
  const std::size_t p = static_cast<std::size_t>(phase(j));
  const std::size_t fm = model_.drift.forcing_mode;
  for (std::size_t i = 0; i < n_; ++i) {
    double z;
    if (frozen_noise_) {
      z = rho_const_ * amplitude_[i] * coupled_convolution_pair(grid_, i + 1, j, rate_[i]).second;
    } else {
      z = coupled_gaussian_pair(grid_, i + 1, j, cov_[p * n_ + i],
                                cond_var_[p * n_ + i])
              .second;
    }
    x[i] = decay_[i] * x[i] + (i + 1 == fm ? forcing_[p] : 0.0) + z;
  }
}

GalerkinState AffineOracle::advance(GalerkinState x, std::int64_t j_end) const {
  if (x.size() != n_) throw std::invalid_argument("oracle: state length differs from the truncation");
  if (j_end < x.time_index) throw std::invalid_argument("oracle: end index precedes the start index");
  for (std::int64_t j = x.time_index; j < j_end; ++j) step_in_place(x.coeffs, j);
  x.time_index = j_end;
  return x;
}

PathSlice AffineOracle::simulate(const GalerkinState& x0, std::int64_t j_end) const {
  if (x0.size() != n_) throw std::invalid_argument("oracle: state length differs from the truncation");
  if (j_end < x0.time_index) throw std::invalid_argument("oracle: end index precedes the start index");
  PathSlice out{{}, provenance()};
  out.states.push_back(x0);
  GalerkinState x = x0;
  for (std::int64_t j = x0.time_index; j < j_end; ++j) {
    step_in_place(x.coeffs, j);
    x.time_index = j + 1;
    out.states.push_back(x);
  }
  return out;
}

Provenance AffineOracle::provenance() const { return {model_hash(model_), grid_.seed(), "exact"}; }

PathSlice exact_affine_path(const ModelSpec& model, const NoiseGrid& grid, const GalerkinState& x0,
                            std::int64_t j_end) {
  AffineOracle oracle(model, grid, x0.size());
  return oracle.simulate(x0, j_end);
}

}  // namespace rps
