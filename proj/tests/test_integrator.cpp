#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "gen.hpp"
#include "rps/config.hpp"
#include "rps/errors.hpp"
#include "rps/integrator.hpp"
#include "rps/model.hpp"
#include "rps/noise.hpp"
#include "rps/spectral.hpp"
#include "rps/stats.hpp"

using namespace rps;

namespace {

ModelSpec affine(double c, double b, double sigma, double eps, double tau = 1.0) {
  ModelSpec m = default_model();
  m.drift.dissipation = c;
  m.drift.forcing = b;
  m.noise.sigma = sigma;
  m.noise.epsilon = eps;
  m.initial.family = InitialFamily::Zero;
  return with_period(m, tau);
}

SchemeConfig scheme(double h, std::size_t n, SchemeVariant v = SchemeVariant::Implicit) {
  SchemeConfig s;
  s.variant = v;
  s.h = h;
  s.n = n;
  return s;
}

bool same_bits(const Coeffs& a, const Coeffs& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Simpson's rule on an even number of panels.
template <class F>
double simpson(F f, double a, double b, int panels) {
  const double w = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(a + k * w);
  return acc * w / 3.0;
}

}  // namespace

TEST_CASE("without drift and noise a step is the semigroup") {
  ModelSpec m = affine(0.0, 0.0, 0.0, 0.0);
  m.drift.dissipation = 0.0;
  gen::Gen g(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 12));
    const double h = 1.0 / g.integer(2, 200);
    const NoiseGrid grid(g.bits(), 1.0, h, n);
    for (auto v : {SchemeVariant::Implicit, SchemeVariant::Explicit}) {
      GalerkinState x{g.vector(n), g.integer(-50, 50)};
      const GalerkinState y = step(scheme(h, n, v), m, grid, x);
      const Coeffs s = semigroup_apply(m.op, h, x.coeffs);
      CHECK(y.time_index == x.time_index + 1);
      for (std::size_t i = 0; i < n; ++i) CHECK(y.coeffs[i] == doctest::Approx(s[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("implicit step matches the closed-form affine recursion over 1000 steps") {
  gen::Gen g(2);
  for (int trial = 0; trial < 10; ++trial) {
    const double tau = g.uniform(0.5, 2.0);
    const std::int64_t steps = g.integer(8, 128);
    const double c = g.uniform(0.1, 5.0), b = g.uniform(-1.0, 1.0);
    const ModelSpec m = affine(c, b, g.uniform(0.0, 2.0), g.uniform(0.0, 0.5), tau);
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 10));
    const NoiseGrid grid = NoiseGrid::with_steps(g.bits(), tau, steps, n);
    const double h = grid.h();
    Integrator integ(scheme(h, n), m, grid);
    std::vector<double> x = g.vector(n), ref = x;
    const std::int64_t j0 = g.integer(-2000, 0);
    double worst = 0.0;
    for (std::int64_t j = j0; j < j0 + 1000; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double lam = std::pow((i + 1) * std::numbers::pi, 2);
        const double a = std::exp(-lam * h);
        const double tj = static_cast<double>(j) * h, tn = static_cast<double>(j + 1) * h;
        const double beta = std::sin(2 * std::numbers::pi * tn / tau);
        const double rho = 1.0 + m.noise.epsilon * std::sin(2 * std::numbers::pi * tj / tau);
        const double gam = m.noise.sigma * std::pow(lam, -m.noise.decay);
        const double forcing = i == 0 ? h * b * beta : 0.0;
        ref[i] = a * (ref[i] + forcing + rho * gam * grid.increment(i + 1, j)) / (1.0 + c * h * a);
      }
      integ.step_in_place(x, j);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(x[i] - ref[i]));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("one implicit step from x1 = 1 with c = 1, h = 0.05") {
  const ModelSpec m = affine(1.0, 0.0, 0.0, 0.0);
  const NoiseGrid grid(0, 1.0, 0.05, 1);
  const GalerkinState y = step(scheme(0.05, 1), m, grid, GalerkinState{{1.0}, 0});
  CHECK(y.coeffs[0] == doctest::Approx(0.592415).epsilon(1e-6));
  const double a = std::exp(-std::numbers::pi * std::numbers::pi * 0.05);
  CHECK(y.coeffs[0] == doctest::Approx(a / (1 + 0.05 * a)).epsilon(1e-12));
}

TEST_CASE("semiflow: r -> t equals r -> s -> t bit for bit") {
  gen::Gen g(3);
  for (int trial = 0; trial < 40; ++trial) {
    ModelSpec m = default_model();
    if (trial % 2) {
      m.drift.family = DriftFamily::ModeDiagonalTanh;
      m.drift.gain = g.uniform(0.0, 2.0);
    }
    m.drift.forcing = g.uniform(-1.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 8));
    const NoiseGrid grid = NoiseGrid::with_steps(g.bits(), 1.0, g.integer(4, 64), n);
    const auto v = trial % 3 ? SchemeVariant::Implicit : SchemeVariant::Explicit;
    Integrator integ(scheme(grid.h(), n, v), m, grid);
    const std::int64_t r = g.integer(-300, 0), s = r + g.integer(0, 100), t = s + g.integer(0, 100);
    const GalerkinState x0{g.vector(n), r};
    const GalerkinState direct = integ.advance(x0, t);
    const GalerkinState split = integ.advance(integ.advance(x0, s), t);
    CHECK(direct.time_index == t);
    CHECK(same_bits(direct.coeffs, split.coeffs));
    const PathSlice path = integ.simulate(x0, t);
    CHECK(same_bits(path.states.back().coeffs, direct.coeffs));
    CHECK(path.states.size() == static_cast<std::size_t>(t - r + 1));
  }
}

TEST_CASE("simulate with j_end equal to the start returns x0 only") {
  const ModelSpec m = default_model();
  const NoiseGrid grid(9, 1.0, 1.0 / 16, 4);
  const GalerkinState x0{{0.1, 0.2, 0.3, 0.4}, -32};
  const PathSlice p = simulate(scheme(1.0 / 16, 4), m, grid, x0, -32);
  REQUIRE(p.states.size() == 1);
  CHECK(p.states[0] == x0);
  CHECK(p.provenance.variant == "implicit");
  CHECK(p.provenance.seed == 9);
  CHECK_THROWS(simulate(scheme(1.0 / 16, 4), m, grid, x0, -33));
}

TEST_CASE("implicit residual stays below ten times the tolerance") {
  gen::Gen g(4);
  for (int trial = 0; trial < 30; ++trial) {
    ModelSpec m = default_model();
    m.drift.family = DriftFamily::ModeDiagonalTanh;
    m.drift.gain = g.uniform(0.0, 3.0);
    m.drift.dissipation = m.drift.gain + g.uniform(0.1, 4.0);
    m.drift.forcing = g.uniform(-2.0, 2.0);
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 10));
    const NoiseGrid grid = NoiseGrid::with_steps(g.bits(), 1.0, g.integer(2, 64), n);
    Integrator integ(scheme(grid.h(), n), m, grid);
    std::vector<double> x = g.vector(n, 3.0);
    for (std::int64_t j = 0; j < 50; ++j) {
      const std::vector<double> before = x;
      integ.step_in_place(x, j);
      CHECK(integ.implicit_residual(before, j, x) <= 10.0 * integ.config().tolerance);
    }
  }
}

TEST_CASE("exact oracle: zero forcing and zero noise give pure exponential decay") {
  const double c = 0.7;
  const ModelSpec m = affine(c, 0.0, 0.0, 0.0);
  const std::size_t n = 5;
  const NoiseGrid grid(1, 1.0, 1.0 / 32, n);
  const GalerkinState x0{{1.0, -2.0, 0.5, 0.25, 3.0}, -64};
  const PathSlice p = exact_affine_path(m, grid, x0, 16);
  CHECK(p.provenance.variant == "exact");
  for (const auto& s : p.states) {
    const double dt = static_cast<double>(s.time_index - x0.time_index) / 32.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lam = std::pow((i + 1) * std::numbers::pi, 2);
      CHECK(s.coeffs[i] == doctest::Approx(std::exp(-(lam + c) * dt) * x0.coeffs[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact oracle forcing increments") {
  const double c = 1.3, b = 0.8, h = 1.0 / 40;
  SUBCASE("constant profile") {
    ModelSpec m = affine(c, b, 1.0, 0.0);
    m.drift.profile.shape = PeriodicProfile::Shape::Constant;
    const AffineOracle oracle(m, NoiseGrid(1, 1.0, h, 3), 3);
    const double k = std::numbers::pi * std::numbers::pi + c;
    for (std::int64_t p = 0; p < 40; ++p) {
      CHECK(oracle.forcing_increment(1, p) == doctest::Approx(b * (1 - std::exp(-k * h)) / k).epsilon(1e-12));
      CHECK(oracle.forcing_increment(2, p) == 0.0);
    }
  }
  SUBCASE("sine profile") {
    const ModelSpec m = affine(c, b, 1.0, 0.0);
    const AffineOracle oracle(m, NoiseGrid(1, 1.0, h, 3), 3);
    const double k = std::numbers::pi * std::numbers::pi + c;
    for (std::int64_t p = 0; p < 40; ++p) {
      const double tj = p * h;
      const double ref =
          b * simpson([&](double s) { return std::exp(-k * (h - s)) * std::sin(2 * std::numbers::pi * (tj + s)); }, 0.0,
                      h, 2000);
      CHECK(oracle.forcing_increment(1, p) == doctest::Approx(ref).epsilon(1e-10).scale(1e-14));
    }
  }
  CHECK_THROWS_AS(AffineOracle(default_model(), NoiseGrid(1, 1.0, h, 3).coarsened(2), 3), ConfigError);
}

TEST_CASE("exact oracle: stationary variance with constant noise factor") {
  const double c = 1.0;
  const ModelSpec m = affine(c, 0.0, 1.0, 0.0);
  const std::size_t n = 2, paths = 10000;
  const NoiseGrid proto(0, 1.0, 1.0 / 64, n);
  const AffineOracle base(m, proto, n);
  std::vector<double> s1, s2;
  for (std::size_t p = 0; p < paths; ++p) {
    const AffineOracle o = base.rebind(NoiseGrid(sample_seed(17, p), 1.0, 1.0 / 64, n));
    const GalerkinState x = o.advance(GalerkinState{{0.0, 0.0}, 0}, 128);
    s1.push_back(x.coeffs[0] * x.coeffs[0]);
    s2.push_back(x.coeffs[1] * x.coeffs[1]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = std::pow((i + 1) * std::numbers::pi, 2);
    const double gam = std::pow(lam, -0.26);
    const double target = gam * gam / (2 * (lam + c)) * (1 - std::exp(-2 * (lam + c) * 2.0));
    const MeanEstimate e = estimate_mean(i == 0 ? s1 : s2);
    CHECK(std::abs(e.mean - target) <= 3.0 * e.std_dev / std::sqrt(double(paths)));
  }
}

TEST_CASE("exact oracle: time-varying noise factor reproduces the variance integral") {
  const double c = 1.0, eps = 0.6, tau = 0.5;
  const ModelSpec m = affine(c, 0.0, 1.0, eps, tau);
  const std::size_t paths = 10000;
  const double h = tau / 32;
  const AffineOracle base(m, NoiseGrid(0, tau, h, 1), 1);
  std::vector<double> sq;
  for (std::size_t p = 0; p < paths; ++p) {
    const AffineOracle o = base.rebind(NoiseGrid(sample_seed(5, p), tau, h, 1));
    sq.push_back(std::pow(o.advance(GalerkinState{{0.0}, 0}, 40).coeffs[0], 2));
  }
  const double k = std::numbers::pi * std::numbers::pi + c, T = 40 * h;
  const double gam = std::pow(std::numbers::pi * std::numbers::pi, -0.26);
  const double target = simpson(
      [&](double s) {
        const double r = 1 + eps * std::sin(2 * std::numbers::pi * s / tau);
        return std::exp(-2 * k * (T - s)) * gam * gam * r * r;
      },
      0.0, T, 4000);
  const MeanEstimate e = estimate_mean(sq);
  CHECK(std::abs(e.mean - target) <= 3.0 * e.std_dev / std::sqrt(double(paths)));
}

TEST_CASE("explicit and implicit one-step gap shrinks like h squared") {
  const ModelSpec m = affine(1.0, 0.0, 0.0, 0.0);
  auto gap = [&](std::int64_t steps) {
    const NoiseGrid grid = NoiseGrid::with_steps(0, 1.0, steps, 1);
    const GalerkinState x{{1.0}, 0};
    const double yi = step(scheme(grid.h(), 1, SchemeVariant::Implicit), m, grid, x).coeffs[0];
    const double ye = step(scheme(grid.h(), 1, SchemeVariant::Explicit), m, grid, x).coeffs[0];
    return std::abs(yi - ye);
  };
  for (std::int64_t steps : {256, 1024, 4096}) {
    const double ratio = gap(steps) / gap(2 * steps);
    CHECK(ratio >= 0.8 * 4.0);
    CHECK(ratio <= 1.2 * 4.0);
  }
}

TEST_CASE("two solutions under shared noise contract exponentially") {
  gen::Gen g(6);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = g.uniform(0.2, 4.0);
    const ModelSpec m = affine(c, g.uniform(-1, 1), g.uniform(0, 2), g.uniform(0, 0.5));
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 8));
    const NoiseGrid grid = NoiseGrid::with_steps(g.bits(), 1.0, g.integer(16, 128), n);
    const double h = grid.h();
    Integrator a(scheme(h, n), m, grid), b = a.rebind(grid);
    std::vector<double> x = g.vector(n), y = g.vector(n), dw(n);
    std::vector<double> t, logsq;
    double prev = INFINITY;
    bool monotone = true;
    for (std::int64_t j = 0; j < 400; ++j) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
      if (d2 < 1e-16) break;
      monotone = monotone && d2 < prev;
      prev = d2;
      t.push_back(j * h);
      logsq.push_back(std::log(d2));
      a.increments_into(j, dw);
      a.step_with_increments(x, j, dw);
      b.step_with_increments(y, j, dw);
    }
    CHECK(monotone);
    REQUIRE(t.size() >= 3);
    const LinearFit fit = fit_line(t, logsq);
    const double lam_n = std::pow(n * std::numbers::pi, 2);
    const double rate = 2 * c * (1 - h * (lam_n + std::sqrt(lam_n * lam_n + c * c)));
    CHECK(-fit.slope >= rate);
    CHECK(-fit.slope >= 2 * (std::numbers::pi * std::numbers::pi) * 0.9);
  }
}

TEST_CASE("strong error against the exact oracle decreases as h halves") {
  const ModelSpec m = affine(1.0, 0.15, 1.0, 0.0);
  const std::size_t n = 4, paths = 200;
  const std::int64_t base_steps = 256;
  const NoiseGrid proto(0, 1.0, 1.0 / base_steps, n);
  const AffineOracle oracle_proto(m, proto, n);
  std::vector<double> err(4, 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    const NoiseGrid base(sample_seed(3, p), 1.0, 1.0 / base_steps, n);
    const GalerkinState ref = oracle_proto.rebind(base).advance(GalerkinState{Coeffs(n, 0.0), -base_steps}, 0);
    for (std::size_t r = 0; r < 4; ++r) {
      const std::size_t factor = std::size_t{64} >> r;
      const NoiseGrid coarse = base.coarsened(factor);
      Integrator integ(scheme(coarse.h(), n), m, coarse);
      const GalerkinState x = integ.advance(GalerkinState{Coeffs(n, 0.0), -coarse.m()}, 0);
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) d2 += std::pow(x.coeffs[i] - ref.coeffs[i], 2);
      err[r] += d2 / paths;
    }
  }
  for (std::size_t r = 1; r < 4; ++r) CHECK(err[r] < err[r - 1]);
}

TEST_CASE("integrator error paths") {
  const NoiseGrid grid(1, 1.0, 0.5, 2);
  ModelSpec tanh_model = default_model();
  tanh_model.drift.family = DriftFamily::ModeDiagonalTanh;
  tanh_model.drift.gain = 0.5;
  CHECK_THROWS_AS(AffineOracle(tanh_model, grid, 2), ConfigError);
  CHECK_THROWS_AS(exact_affine_path(tanh_model, grid, GalerkinState{{0.0, 0.0}, 0}, 1), ConfigError);

  ModelSpec stiff = default_model();
  stiff.drift.dissipation = 1000.0;
  CHECK_THROWS_AS(Integrator(scheme(0.5, 2), stiff, grid), ConfigError);
  CHECK_NOTHROW(Integrator(scheme(0.5, 2, SchemeVariant::Explicit), stiff, grid));

  CHECK_THROWS_AS(Integrator(scheme(0.25, 2), default_model(), grid), ConfigError);
  CHECK_THROWS_AS(Integrator(scheme(0.5, 3), default_model(), grid), ConfigError);

  SchemeConfig one = scheme(0.5, 2);
  one.max_iterations = 1;
  Integrator integ(one, default_model(), grid);
  std::vector<double> x{1.0, 1.0};
  CHECK_THROWS_AS(integ.step_in_place(x, 0), NumericalError);

  CHECK_THROWS_AS(integ.rebind(NoiseGrid(1, 2.0, 0.5, 2)), ConfigError);
}
