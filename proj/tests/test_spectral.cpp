#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gen.hpp"
#include "rps/errors.hpp"
#include "rps/spectral.hpp"

using namespace rps;

namespace {

const SpectralOperator kLap = SpectralOperator::dirichlet_laplacian();

// Stationary point of x^{-nu}(1 - e^{-x}): x e^{-x} = nu (1 - e^{-x}).
double c1_stationary(double nu) {
  double lo = 1e-12, hi = 200.0;
  auto phi = [nu](double x) { return x * std::exp(-x) - nu * -std::expm1(-x); };
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0.0 ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  return std::pow(x, -nu) * -std::expm1(-x);
}

double c1_grid(double nu) {
  double best = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double x = std::pow(10.0, -12.0 + 18.0 * k / 200000.0);
    best = std::max(best, std::pow(x, -nu) * -std::expm1(-x));
  }
  return best;
}

double c2_grid(double mu) {
  double best = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double x = std::pow(10.0, -12.0 + 15.0 * k / 200000.0);
    best = std::max(best, std::pow(x, mu) * std::exp(-x));
  }
  return best;
}

// Gamma(nu) = Gamma(nu + 3) / (nu (nu + 1) (nu + 2)), with
// Gamma(s) = int_0^inf 2 u^{2s - 1} e^{-u^2} du by composite Simpson; the
// shift keeps the integrand smooth at 0.
double gamma_simpson(double nu) {
  const double s = nu + 3.0;
  const int n = 200000;
  const double b = 12.0, w = b / n;
  auto f = [s](double u) { return 2.0 * std::pow(u, 2.0 * s - 1.0) * std::exp(-u * u); };
  double acc = f(0.0) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * w);
  return acc * w / 3.0 / (nu * (nu + 1.0) * (nu + 2.0));
}

}  // namespace

TEST_CASE("dirichlet eigenvalues are i^2 pi^2") {
  for (std::size_t i = 1; i <= 300; ++i) {
    CHECK(kLap.eigenvalue(i) == static_cast<double>(i * i) * kPiSquared);
    if (i > 1) CHECK(kLap.eigenvalue(i) >= kLap.eigenvalue(i - 1));
  }
  CHECK_THROWS_AS(kLap.eigenvalue(0), std::out_of_range);
  const auto ev = kLap.eigenvalues(4);
  REQUIRE(ev.size() == 4);
  CHECK(ev[3] == 16.0 * kPiSquared);
}

TEST_CASE("eigenvalue tables are validated") {
  const auto op = SpectralOperator::from_table({1.0, 2.0, 5.0});
  CHECK(op.kind() == OperatorKind::Table);
  CHECK(op.max_modes() == 3);
  CHECK(op.eigenvalue(3) == 5.0);
  CHECK_THROWS_AS(op.eigenvalue(4), std::out_of_range);
  CHECK_THROWS_AS(SpectralOperator::from_table({}), ConfigError);
  CHECK_THROWS_AS(SpectralOperator::from_table({0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(SpectralOperator::from_table({2.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(SpectralOperator::from_table({1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(SpectralOperator::from_table({1.0, INFINITY}), ConfigError);
}

TEST_CASE("semigroup_apply examples") {
  const Coeffs v{1.0, -2.0};
  CHECK(semigroup_apply(kLap, 0.0, v) == v);
  const Coeffs e1{1.0, 0.0, 0.0};
  CHECK(semigroup_apply(kLap, 0.1, e1)[0] == doctest::Approx(0.372708).epsilon(1e-6));
  CHECK(semigroup_apply(kLap, 0.1, e1)[0] == doctest::Approx(std::exp(-kPiSquared * 0.1)).epsilon(1e-15));
  CHECK_THROWS_AS(semigroup_apply(kLap, -1e-3, v), std::invalid_argument);
}

namespace {

double ulps_apart(double a, double b) {
  return std::abs(a - b) / (std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("semigroup law within 4 ulps for moderate exponents") {
  gen::Gen g(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 8));
    const double total = 1.0 / kLap.eigenvalue(n);
    const double s = g.uniform(0.0, total), t = total - s;
    const Coeffs v = g.vector(n);
    const Coeffs a = semigroup_apply(kLap, s, semigroup_apply(kLap, t, v));
    const Coeffs b = semigroup_apply(kLap, s + t, v);
    for (std::size_t i = 0; i < n; ++i) CHECK(ulps_apart(a[i], b[i]) <= 4.0);
  }
}

TEST_CASE("semigroup law for large exponents and contraction") {
  // exp(-x) inherits the rounding of its arguments: lambda s, lambda t and
  // lambda (s + t) each carry half an ulp, so up to about 2x ulps.
  gen::Gen g(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 64));
    const double s = g.log_uniform(1e-6, 0.5), t = g.log_uniform(1e-6, 0.5);
    const Coeffs v = g.vector(n);
    const Coeffs a = semigroup_apply(kLap, s, semigroup_apply(kLap, t, v));
    const Coeffs b = semigroup_apply(kLap, s + t, v);
    for (std::size_t i = 0; i < n; ++i) {
      if (b[i] == 0.0 || std::abs(b[i]) < 1e-290) continue;
      CHECK(ulps_apart(a[i], b[i]) <= 4.0 + 2.0 * kLap.eigenvalue(i + 1) * (s + t));
    }
    CHECK(euclidean_norm(semigroup_apply(kLap, t, v)) <= euclidean_norm(v));
  }
}

TEST_CASE("fractional_apply examples and inverse") {
  gen::Gen g(21);
  const Coeffs v = g.vector(20);
  CHECK(fractional_apply(kLap, 0.0, v) == v);
  CHECK(fractional_apply(kLap, -1.0, Coeffs{1.0, 0.0})[0] == doctest::Approx(0.101321).epsilon(1e-5));
  for (double rho : {-2.0, -0.7, 0.3, 1.0, 2.0}) {
    const Coeffs back = fractional_apply(kLap, rho, fractional_apply(kLap, -rho, v));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-13));
  }
}

TEST_CASE("hr_norm examples") {
  gen::Gen g(13);
  const Coeffs v = g.vector(10);
  CHECK(hr_norm(kLap, 0.0, v) == doctest::Approx(euclidean_norm(v)).epsilon(1e-15));
  CHECK(hr_norm(kLap, 1.0, Coeffs{1.0, 0.0}) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(hr_norm(kLap, 1.0, Coeffs(5, 0.0)) == 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += std::pow((i + 1.0) * (i + 1.0) * kPiSquared, 0.6) * v[i] * v[i];
  CHECK(hr_norm(kLap, 0.6, v) == doctest::Approx(std::sqrt(acc)).epsilon(1e-13));
}

TEST_CASE("project keeps leading entries and is idempotent") {
  const Coeffs v{1.0, 2.0, 3.0};
  CHECK(project(v, 2) == Coeffs{1.0, 2.0});
  CHECK(project(v, 3) == v);
  CHECK(project(v, 10) == v);
  CHECK(project(project(v, 2), 2) == project(v, 2));
  CHECK_THROWS(project(v, 0));
}

TEST_CASE("smoothing constants against independent maximizers") {
  CHECK(smoothing_constants(1.0, 0.0).c1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(smoothing_constants(0.0, 0.0).c1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(smoothing_constants(0.5, 0.0).c2 == 1.0);
  for (double nu : {0.05, 0.2, 0.5, 0.75, 0.95}) {
    const double c1 = smoothing_constants(nu, 0.5).c1;
    CHECK(c1 == doctest::Approx(c1_stationary(nu)).epsilon(1e-9));
    CHECK(c1 >= c1_grid(nu) * (1.0 - 1e-10));
  }
  for (double mu : {0.1, 0.5, 1.0, 2.5}) {
    const double c2 = smoothing_constants(0.5, mu).c2;
    CHECK(c2 == doctest::Approx(c2_grid(mu)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(smoothing_constants(-0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(smoothing_constants(1.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(smoothing_constants(0.5, -1.0), std::invalid_argument);
}

TEST_CASE("smoothing inequalities hold on random draws") {
  gen::Gen g(14);
  for (int trial = 0; trial < 300; ++trial) {
    const double t = g.uniform(1e-6, 10.0);
    const double nu = g.uniform(0.0, 1.0);
    const double mu = g.uniform(0.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 256));
    const SmoothingConstants c = smoothing_constants(nu, mu);
    double lhs1 = 0.0, lhs2 = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double lam = kLap.eigenvalue(i);
      lhs1 = std::max(lhs1, std::pow(lam, -nu) * -std::expm1(-lam * t));
      lhs2 = std::max(lhs2, std::pow(lam, mu) * std::exp(-lam * t));
      CHECK(std::pow(kLap.eigenvalue(1), -nu) >= std::pow(lam, -nu));
    }
    CHECK(lhs1 <= c.c1 * std::pow(t, nu) * (1.0 + 1e-12));
    CHECK(lhs2 <= c.c2 * std::pow(t, -mu) * (1.0 + 1e-12));

    Coeffs v = g.vector(n + 8);
    for (std::size_t i = 0; i < n; ++i) v[i] = 0.0;
    const double tail = euclidean_norm(semigroup_apply(kLap, t, v));
    CHECK(tail <= std::exp(-kLap.eigenvalue(n + 1) * t) * euclidean_norm(v) * (1.0 + 1e-12) + 1e-300);
  }
}

TEST_CASE("gamma_eval") {
  CHECK(gamma_eval(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_eval(5.0) == doctest::Approx(24.0).epsilon(1e-14));
  CHECK(gamma_eval(0.5) == doctest::Approx(1.7724539).epsilon(1e-7));
  for (double nu : {0.5, 0.8, 1.5, 3.2}) CHECK(gamma_eval(nu) == doctest::Approx(gamma_simpson(nu)).epsilon(1e-10));
  CHECK_THROWS_AS(gamma_eval(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_eval(-1.0), std::invalid_argument);
}

TEST_CASE("GalerkinState finiteness") {
  GalerkinState s{{1.0, 2.0}, -3};
  CHECK(s.finite());
  s.coeffs[1] = NAN;
  CHECK_FALSE(s.finite());
}
