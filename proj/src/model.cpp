#include "rps/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rps/errors.hpp"
#include "rps/noise.hpp"

namespace rps {

double PeriodicProfile::operator()(double t) const noexcept {
  if (shape == Shape::Constant) return 1.0;
  return std::sin(2.0 * kPi * t / period);
}

double PeriodicProfile::lipschitz() const noexcept {
  return shape == Shape::Constant ? 0.0 : 2.0 * kPi / period;
}

double DriftSpec::holder_constant() const noexcept {
  return std::abs(forcing) * profile.lipschitz() * std::sqrt(profile.period);
}

double NoiseSpec::mode_amplitude(const SpectralOperator& op, std::size_t i) const {
  return sigma * std::pow(op.eigenvalue(i), -decay);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_i lambda_i^{-p} over the whole operator.
double inverse_power_series(const SpectralOperator& op, double p) {
  if (op.kind() == OperatorKind::Table) {
    double acc = 0.0;
    for (double lam : op.table()) acc += std::pow(lam, -p);
    return acc;
  }
  // lambda_i = (i pi)^2, so the series is pi^{-2p} zeta(2p).
  if (!(2.0 * p > 1.0)) return kInf;
  return std::pow(kPi, -2.0 * p) * std::riemann_zeta(2.0 * p);
}

double inverse_power_partial(const SpectralOperator& op, double p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 1; i <= n; ++i) acc += std::pow(op.eigenvalue(i), -p);
  return acc;
}

}  // namespace

double NoiseSpec::trace(const SpectralOperator& op) const {
  return sigma * sigma * inverse_power_series(op, 2.0 * decay);
}

std::string ModelSpec::canonical_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "operator=" << (op.kind() == OperatorKind::Table ? "table" : "dirichlet");
  for (double lam : op.table()) os << ',' << lam;
  os << ";drift=" << (drift.family == DriftFamily::Affine ? "affine" : "tanh") << ',' << drift.dissipation << ','
     << drift.gain << ',' << drift.forcing << ',' << drift.forcing_mode << ','
     << (drift.profile.shape == PeriodicProfile::Shape::Sine ? "sine" : "constant") << ',' << drift.profile.period;
  os << ";noise=" << noise.sigma << ',' << noise.decay << ',' << noise.epsilon << ','
     << (noise.profile.shape == PeriodicProfile::Shape::Sine ? "sine" : "constant") << ',' << noise.profile.period;
  os << ";period=" << period << ";r=" << regularity << ";alpha=";
  if (alpha) os << *alpha; else os << "default";
  os << ";initial=" << static_cast<int>(initial.family) << ',' << initial.mode << ',' << initial.value << ','
     << initial.amplitude << ',' << initial.extra_decay;
  return os.str();
}

ModelSpec with_period(ModelSpec m, double period) {
  m.period = period;
  m.drift.profile.period = period;
  m.noise.profile.period = period;
  return m;
}

Coeffs drift_eval(const DriftSpec& d, double t, std::span<const double> u) {
  Coeffs out(u.size());
  const double a = d.effective_gain();
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = -d.dissipation * u[i];
    if (a != 0.0) out[i] += a * std::tanh(u[i]);
  }
  if (d.forcing != 0.0 && d.forcing_mode >= 1 && d.forcing_mode <= u.size()) {
    out[d.forcing_mode - 1] += d.forcing * d.profile(t);
  }
  return out;
}

double noise_amplitude(const NoiseSpec& nspec, const SpectralOperator& op, double t, std::size_t i) {
  if (i == 0) throw std::invalid_argument("noise_amplitude: mode index is 1-based");
  return nspec.time_factor(t) * nspec.mode_amplitude(op, i);
}

double growth_constant(const ModelSpec& m) {
  const double f00 = std::abs(m.drift.forcing * m.drift.profile(0.0));
  return f00 + m.drift.lipschitz_constant() * (1.0 + std::sqrt(m.period));
}

double noise_bound(const ModelSpec& m) {
  return (1.0 + m.noise.epsilon) * std::sqrt(m.noise.trace(m.op));
}

double initial_second_moment(const ModelSpec& m) {
  const InitialData& init = m.initial;
  switch (init.family) {
    case InitialFamily::Zero:
      return 0.0;
    case InitialFamily::SingleMode:
      return init.value * init.value;
    case InitialFamily::HrRandom:
      return init.amplitude * init.amplitude *
             inverse_power_series(m.op, m.regularity + 1.0 + 2.0 * init.extra_decay);
  }
  return kInf;
}

double initial_hr_second_moment(const ModelSpec& m) {
  const InitialData& init = m.initial;
  switch (init.family) {
    case InitialFamily::Zero:
      return 0.0;
    case InitialFamily::SingleMode:
      return std::pow(m.op.eigenvalue(init.mode), m.regularity) * init.value * init.value;
    case InitialFamily::HrRandom:
      return init.amplitude * init.amplitude * inverse_power_series(m.op, 1.0 + 2.0 * init.extra_decay);
  }
  return kInf;
}

double initial_hr_second_moment(const ModelSpec& m, std::size_t n) {
  const InitialData& init = m.initial;
  switch (init.family) {
    case InitialFamily::Zero:
      return 0.0;
    case InitialFamily::SingleMode:
      return init.mode <= n ? std::pow(m.op.eigenvalue(init.mode), m.regularity) * init.value * init.value : 0.0;
    case InitialFamily::HrRandom:
      return init.amplitude * init.amplitude * inverse_power_partial(m.op, 1.0 + 2.0 * init.extra_decay, n);
  }
  return kInf;
}

GalerkinState make_initial(const ModelSpec& m, std::size_t n, std::uint64_t seed, std::int64_t time_index) {
  GalerkinState x{Coeffs(n, 0.0), time_index};
  const InitialData& init = m.initial;
  switch (init.family) {
    case InitialFamily::Zero:
      break;
    case InitialFamily::SingleMode:
      if (init.mode >= 1 && init.mode <= n) x.coeffs[init.mode - 1] = init.value;
      break;
    case InitialFamily::HrRandom: {
      const double exponent = -(m.regularity + 1.0) / 2.0 - init.extra_decay;
      for (std::size_t i = 1; i <= n; ++i) {
        x.coeffs[i - 1] =
            init.amplitude * keyed_normal(seed, Stream::Initial, i, 0) * std::pow(m.op.eigenvalue(i), exponent);
      }
      break;
    }
  }
  return x;
}

bool ValidationReport::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed || !c.required; });
}

const ValidationCheck* ValidationReport::find(std::string_view prefix) const noexcept {
  for (const auto& c : checks) {
    if (std::string_view(c.name).substr(0, prefix.size()) == prefix) return &c;
  }
  return nullptr;
}

std::vector<const ValidationCheck*> ValidationReport::failures() const {
  std::vector<const ValidationCheck*> out;
  for (const auto& c : checks) {
    if (c.required && !c.passed) out.push_back(&c);
  }
  return out;
}

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// One-step constant 3 max(lambda_n^2, C_f hat^2)(1 + h) + 3 C_g^2.
double one_step_constant(double lambda_n, double growth, double cg, double h) {
  return 3.0 * std::max(lambda_n * lambda_n, growth * growth) * (1.0 + h) + 3.0 * cg * cg;
}

// Left side minus right side of the mean-square stepsize condition; <= 0 passes.
double mean_square_condition(double h, double lambda_n, double growth, double lip, double dis, double cg) {
  const double cn = one_step_constant(lambda_n, growth, cg, h);
  return (5.0 * growth * std::sqrt(lambda_n) * (1.0 + cn * h) + 2.0 * lip * std::sqrt(cn)) * std::sqrt(h) -
         2.0 * dis;
}

double contraction_stepsize_bound(double lambda_n, double lip) {
  return 1.0 / (lambda_n + std::sqrt(lambda_n * lambda_n + lip * lip));
}

}  // namespace

ValidationReport validate(const ModelSpec& m, std::size_t n, double h, SchemeVariant variant) {
  if (n == 0) throw ConfigError("scheme.n: truncation must be at least 1");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("scheme.h: stepsize must be positive");

  ValidationReport rep;
  const double tau = m.period;
  const double lam1 = m.op.eigenvalue(1);
  const bool n_fits = n <= m.op.max_modes();
  const double lam_n = m.op.eigenvalue(std::min(n, m.op.max_modes()));
  const double lip = m.drift.lipschitz_constant();
  const double dis = m.drift.dissipativity_constant();
  const double growth = growth_constant(m);
  const double trace = m.noise.trace(m.op);
  const double cg = noise_bound(m);
  const double alpha = m.alpha_or_default();
  auto guarded = [](auto&& fn) {
    try {
      return fn();
    } catch (const std::exception&) {
      return kInf;
    }
  };
  const double c_xi2 = guarded([&] { return initial_second_moment(m); });
  const double xi_hr2 = guarded([&] { return initial_hr_second_moment(m); });

  rep.growth_constant = growth;
  rep.lipschitz = lip;
  rep.dissipativity = dis;
  rep.noise_bound = cg;
  rep.one_step_constant = one_step_constant(lam_n, growth, cg, h);
  rep.mean_square_bound = c_xi2 + 2.0 * (growth * lip + growth + cg * cg) / (2.0 * lam1 - growth);

  auto add = [&rep](std::string name, std::string relation, std::vector<std::pair<std::string, double>> values,
                    bool passed, bool required = true) {
    rep.checks.push_back({std::move(name), std::move(relation), std::move(values), passed, required});
  };

  add("Assumption 1: A positive self-adjoint, lambda_i increasing",
      "0 < lambda_1 <= ... <= lambda_n, n within operator table",
      {{"lambda_1", lam1}, {"lambda_n", lam_n}, {"n", static_cast<double>(n)}},
      lam1 > 0.0 && lam_n >= lam1 && n_fits);

  add("Assumption 2: initial data in L2(Omega; H^r)", "E||xi||^2 = C_xi^2 < inf, E||A^{r/2} xi||^2 < inf, 0 < r <= 1",
      {{"C_xi^2", c_xi2}, {"E||A^{r/2}xi||^2", xi_hr2}, {"r", m.regularity}},
      std::isfinite(c_xi2) && std::isfinite(xi_hr2) && m.regularity > 0.0 && m.regularity <= 1.0 &&
          (m.initial.family != InitialFamily::SingleMode || (m.initial.mode >= 1 && m.initial.mode <= m.op.max_modes())));

  const double holder = m.drift.holder_constant();
  add("Assumption 3: f periodic, Lipschitz, Hoelder in time, dissipative",
      "c > 0, a >= 0, 0 < C_f^dis <= C_f^lip, C_beta <= C_f^lip, profile period = tau",
      {{"C_f^lip", lip}, {"C_f^dis", dis}, {"C_beta", holder}, {"profile_period", m.drift.profile.period},
       {"tau", tau}},
      m.drift.dissipation > 0.0 && m.drift.gain >= 0.0 && dis > 0.0 && dis <= lip && holder <= lip &&
          m.drift.forcing_mode >= 1 && m.drift.profile.period == tau);

  const double g_sup = (1.0 + m.noise.epsilon) * std::sqrt(trace);
  const double g_lip = m.noise.epsilon * m.noise.profile.lipschitz() * std::sqrt(trace);
  add("Assumption 4: g periodic, bounded and Lipschitz with C_g", "sup||g|| <= C_g, Lip(g) <= C_g, trace finite",
      {{"sup||g||", g_sup}, {"Lip(g)", g_lip}, {"C_g", cg}, {"sigma", m.noise.sigma}, {"epsilon", m.noise.epsilon}},
      std::isfinite(trace) && m.noise.sigma >= 0.0 && m.noise.epsilon >= 0.0 && m.noise.epsilon < 1.0 &&
          g_sup <= cg * (1.0 + 1e-15) && g_lip <= cg && m.noise.profile.period == tau);

  add("Assumption 5: C_f < lambda_1", "C_f^dis < lambda_1", {{"C_f^dis", dis}, {"lambda_1", lam1}}, dis < lam1);

  add("Assumption 6: ||S(t)|| <= exp(-alpha t)", "0 < alpha <= lambda_1", {{"alpha", alpha}, {"lambda_1", lam1}},
      alpha > 0.0 && alpha <= lam1);

  const double ratio = tau / h;
  const bool aligned = finite_positive(tau) && std::round(ratio) >= 1.0 &&
                       std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio;
  add("Assumption 7: Wiener shift theta_tau is a grid shift", "tau / h = m is a positive integer",
      {{"tau", tau}, {"h", h}, {"tau/h", ratio}}, aligned);

  add("Assumption 8: 2 lambda_1 > C_f hat and alpha > C_f", "2 lambda_1 > C_f hat, alpha > C_f^lip",
      {{"2 lambda_1", 2.0 * lam1}, {"C_f hat", growth}, {"alpha", alpha}, {"C_f^lip", lip}},
      2.0 * lam1 > growth && alpha > lip);

  const double b_sup = std::abs(m.drift.forcing) * m.drift.profile.sup_abs();
  add("linear growth: ||f(t,u)|| <= C_f hat (1 + ||u||)", "|b| sup|beta| <= C_f hat and C_f^lip <= C_f hat",
      {{"|b| sup|beta|", b_sup}, {"C_f hat", growth}}, b_sup <= growth && lip <= growth);

  const double contraction = h * lip * std::exp(-lam1 * h);
  add("implicit solver contraction: h C_f^lip exp(-lambda_1 h) < 1", "factor < 1", {{"factor", contraction}},
      contraction < 1.0, variant == SchemeVariant::Implicit);

  add("stepsize: h < 1", "h < 1", {{"h", h}}, h < 1.0, false);

  const double ms_gap = mean_square_condition(h, lam_n, growth, lip, dis, cg);
  add("stepsize: mean-square boundedness condition",
      "(5 C_f hat sqrt(lambda_n)(1 + C_n h) + 2 C_f sqrt(C_n)) sqrt(h) <= 2 C_f",
      {{"lhs - rhs", ms_gap}, {"C_n", rep.one_step_constant}}, ms_gap <= 0.0, false);

  const double two_sol = contraction_stepsize_bound(lam_n, lip);
  add("stepsize: two-solution contraction condition", "h <= 1 / (lambda_n + sqrt(lambda_n^2 + C_f^2))",
      {{"h", h}, {"bound", two_sol}}, h <= two_sol, false);

  // Largest h meeting every stepsize condition at once.
  double hi = std::min(1.0, two_sol);
  if (lip > 0.0) {
    // h C e^{-lambda_1 h} < 1 holds for all h when C < e lambda_1; otherwise
    // it holds below the smaller root, which is at least 1/C.
    if (lip >= std::numbers::e * lam1) hi = std::min(hi, 1.0 / lip);
  }
  double suggested = 0.0;
  if (dis > 0.0 && std::isfinite(cg) && mean_square_condition(0.0, lam_n, growth, lip, dis, cg) <= 0.0) {
    double lo = 0.0;
    if (mean_square_condition(hi, lam_n, growth, lip, dis, cg) <= 0.0) {
      lo = hi;
    } else {
      double up = hi;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + up);
        if (mean_square_condition(mid, lam_n, growth, lip, dis, cg) <= 0.0) lo = mid; else up = mid;
      }
    }
    suggested = lo;
  }
  rep.suggested_max_h = suggested;
  return rep;
}

}  // namespace rps
