#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gen.hpp"
#include "rps/stats.hpp"

using namespace rps;

TEST_CASE("estimate_mean on a small sample") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanEstimate e = estimate_mean(v);
  CHECK(e.mean == 2.5);
  CHECK(e.count == 4);
  CHECK(e.std_dev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(e.half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));

  const MeanEstimate one = estimate_mean(std::vector<double>{7.0});
  CHECK(one.mean == 7.0);
  CHECK(one.half_width == 0.0);
  const MeanEstimate none = estimate_mean(std::vector<double>{});
  CHECK(none.count == 0);
  CHECK(none.mean == 0.0);
}

TEST_CASE("estimate_mean of a constant sample has zero width") {
  gen::Gen g(1);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = g.uniform(-1e3, 1e3);
    const std::vector<double> v(static_cast<std::size_t>(g.integer(2, 500)), c);
    const MeanEstimate e = estimate_mean(v);
    CHECK(e.mean == doctest::Approx(c));
    CHECK(e.half_width <= 1e-12 * std::abs(c) + 1e-300);
  }
}

TEST_CASE("fit_line recovers exact lines") {
  gen::Gen g(2);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = g.uniform(-5, 5), b = g.uniform(-5, 5);
    const std::size_t n = static_cast<std::size_t>(g.integer(2, 30));
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(g.uniform(-10, 10) + 20.0 * i);
      y.push_back(a * x.back() + b);
    }
    const LinearFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(a).epsilon(1e-9).scale(1.0));
    CHECK(f.intercept == doctest::Approx(b).epsilon(1e-9).scale(1.0));
    CHECK(f.points == n);
    if (a != 0.0) CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("fit_line R^2 against a hand computation") {
  const std::vector<double> x{0, 1, 2, 3}, y{0, 1, 1, 3};
  const LinearFit f = fit_line(x, y);
  // slope = Sxy / Sxx = 4.5 / 5, mean y = 1.25
  CHECK(f.slope == doctest::Approx(0.9));
  CHECK(f.intercept == doctest::Approx(1.25 - 0.9 * 1.5));
  const double ss_tot = 1.5625 + 0.0625 + 0.0625 + 3.0625;
  double ss_res = 0.0;
  for (int i = 0; i < 4; ++i) ss_res += std::pow(y[i] - (f.slope * x[i] + f.intercept), 2);
  CHECK(f.r_squared == doctest::Approx(1.0 - ss_res / ss_tot));
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0, 1.0}, std::vector<double>{2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0, 2.0}, std::vector<double>{2.0}), std::invalid_argument);
}

TEST_CASE("run_samples keeps sample order for any worker count") {
  auto task = [](std::size_t s) { return std::vector<double>{double(s), double(s * s)}; };
  const auto one = run_samples(37, 1, task);
  for (unsigned w : {2u, 3u, 8u, 64u}) CHECK(run_samples(37, w, task) == one);
  REQUIRE(one.size() == 37);
  CHECK(one[36][1] == 36.0 * 36.0);
  CHECK(run_samples(0, 3, task).empty());
}

TEST_CASE("run_samples rethrows a task failure") {
  std::atomic<int> calls{0};
  auto task = [&](std::size_t s) -> std::vector<double> {
    ++calls;
    if (s == 5) throw std::runtime_error("sample five");
    return {};
  };
  CHECK_THROWS_WITH(run_samples(20, 1, task), "sample five");
  CHECK_THROWS_WITH(run_samples(20, 4, task), "sample five");
}
