#include "rps/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "rps/errors.hpp"
#include "rps/noise.hpp"

namespace rps {

std::int64_t grid_index(double t, double h) {
  if (!std::isfinite(t)) throw ConfigError("experiment.t: target time must be finite");
  const double r = t / h;
  const double idx = std::round(r);
  if (std::abs(r - idx) > 1e-9 * std::max(1.0, std::abs(r))) {
    throw ConfigError("experiment.t: target time " + std::to_string(t) + " is not a multiple of h = " +
                      std::to_string(h));
  }
  return static_cast<std::int64_t>(idx);
}

namespace {

void require_valid(const ModelSpec& m, std::size_t n, double h, SchemeVariant variant) {
  const ValidationReport rep = validate(m, n, h, variant);
  if (rep.passed()) return;
  std::string msg = "validation failed:";
  for (const ValidationCheck* c : rep.failures()) msg += " [" + c->name + "]";
  throw ConfigError(msg);
}

void require_k_list(const std::vector<int>& k_list) {
  if (k_list.empty()) throw ConfigError("experiment.k_list: must not be empty");
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    if (k_list[i] < 0) throw ConfigError("experiment.k_list: entries must be nonnegative");
    if (i > 0 && k_list[i] <= k_list[i - 1]) throw ConfigError("experiment.k_list: must be strictly increasing");
  }
}

void require_samples(const MonteCarlo& mc) {
  if (mc.samples == 0) throw ConfigError("experiment.samples: must be at least 1");
}

/// Runs one copy of xi from each start index to `end` on the integrator's
/// noise, drawing each increment once. Results follow the order of `starts`.
std::vector<Coeffs> ensemble_endpoints(Integrator& integ, const Coeffs& xi, const std::vector<std::int64_t>& starts,
                                       std::int64_t end) {
  std::vector<std::size_t> order(starts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return starts[a] < starts[b]; });
  if (!starts.empty() && starts[order.back()] > end) {
    throw ConfigError("experiment.t: target time precedes a start time");
  }
  std::vector<Coeffs> states(starts.size());
  std::vector<double> dw(integ.modes());
  std::size_t active = 0;
  const std::int64_t first = starts.empty() ? end : starts[order.front()];
  for (std::int64_t j = first; j < end; ++j) {
    while (active < order.size() && starts[order[active]] == j) states[order[active++]] = xi;
    integ.increments_into(j, dw);
    for (std::size_t a = 0; a < active; ++a) integ.step_with_increments(states[order[a]], j, dw);
  }
  while (active < order.size()) states[order[active++]] = xi;
  return states;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

double squared_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return acc;
}

/// Column c of the per-sample results.
std::vector<double> column(const std::vector<std::vector<double>>& per_sample, std::size_t c) {
  std::vector<double> out(per_sample.size());
  for (std::size_t s = 0; s < per_sample.size(); ++s) out[s] = per_sample[s][c];
  return out;
}

RateRow rate_row(double value, const std::vector<double>& squared_errors) {
  const MeanEstimate e = estimate_mean(squared_errors);
  RateRow row;
  row.value = value;
  row.error = std::sqrt(std::max(0.0, e.mean));
  // Delta method for sqrt of the mean square.
  row.half_width = row.error > 0.0 ? e.half_width / (2.0 * row.error) : 0.0;
  return row;
}

void fit_rates(RateReport& rep, const std::vector<double>& lambdas) {
  std::vector<double> lx, ly, ll;
  bool all_small = true;
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    const RateRow& row = rep.rows[r];
    if (row.error >= 1e-12) all_small = false;
    if (row.error > 0.0) {
      lx.push_back(std::log(row.value));
      ly.push_back(std::log(row.error));
      if (!lambdas.empty()) ll.push_back(std::log(lambdas[r]));
    }
  }
  rep.degenerate = all_small || lx.size() < 2;
  if (rep.degenerate) return;
  rep.fit = fit_line(lx, ly);
  if (!ll.empty()) rep.slope_vs_log_lambda = fit_line(ll, ly).slope;
}

void fit_gaps(const std::vector<GapRow>& rows, double second_moment, LinearFit& fit, double& decay_rate) {
  std::vector<double> kx, ly;
  for (const GapRow& row : rows) {
    if (row.estimate > 0.0 && row.estimate > kGapFloor * second_moment) {
      kx.push_back(row.k);
      ly.push_back(std::log(row.estimate));
    }
  }
  if (kx.size() >= 2) {
    fit = fit_line(kx, ly);
    decay_rate = -fit.slope;
  } else {
    fit = LinearFit{};
    decay_rate = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

PullbackReport pullback_experiment(const ModelSpec& m, const SchemeConfig& cfg, double t,
                                   const std::vector<int>& k_list, const MonteCarlo& mc) {
  require_k_list(k_list);
  require_samples(mc);
  require_valid(m, cfg.n, cfg.h, cfg.variant);
  const NoiseGrid probe(0, m.period, cfg.h, cfg.n);
  const std::int64_t steps = probe.m();
  const std::int64_t t_idx = grid_index(t, probe.h());

  std::vector<std::int64_t> starts;
  for (int k : k_list) {
    starts.push_back(-static_cast<std::int64_t>(k + 1) * steps);
    starts.push_back(-static_cast<std::int64_t>(k) * steps);
  }
  if (-static_cast<std::int64_t>(k_list.front()) * steps > t_idx) throw ConfigError("experiment.t: target time precedes -k tau for the smallest k");

  const std::size_t nk = k_list.size();
  const Integrator proto(cfg, m, NoiseGrid::with_steps(mc.seed, m.period, steps, cfg.n));
  auto task = [&](std::size_t s) {
    const std::uint64_t seed = sample_seed(mc.seed, s);
    Integrator integ = proto.rebind(NoiseGrid::with_steps(seed, m.period, steps, cfg.n));
    const Coeffs xi = make_initial(m, cfg.n, seed).coeffs;
    const std::vector<Coeffs> end = ensemble_endpoints(integ, xi, starts, t_idx);
    std::vector<double> out(nk + 1);
    for (std::size_t r = 0; r < nk; ++r) out[r] = squared_distance(end[2 * r], end[2 * r + 1]);
    out[nk] = squared_norm(end[1]);
    return out;
  };
  const auto per_sample = run_samples(mc.samples, mc.workers, task);

  PullbackReport rep;
  rep.t = t;
  rep.state_second_moment = estimate_mean(column(per_sample, nk)).mean;
  for (std::size_t r = 0; r < nk; ++r) {
    const MeanEstimate e = estimate_mean(column(per_sample, r));
    rep.rows.push_back({k_list[r], e.mean, e.half_width});
  }
  fit_gaps(rep.rows, rep.state_second_moment, rep.fit, rep.decay_rate);
  return rep;
}

PeriodicityReport periodicity_experiment(const ModelSpec& m, const SchemeConfig& cfg, double t,
                                         const std::vector<int>& k_list, const MonteCarlo& mc) {
  require_k_list(k_list);
  require_samples(mc);
  require_valid(m, cfg.n, cfg.h, cfg.variant);
  const NoiseGrid probe(0, m.period, cfg.h, cfg.n);
  const std::int64_t steps = probe.m();
  const std::int64_t t_idx = grid_index(t, probe.h());

  std::vector<std::int64_t> starts;
  for (int k : k_list) starts.push_back(-static_cast<std::int64_t>(k) * steps);
  if (starts.front() > t_idx) throw ConfigError("experiment.t: target time precedes -k tau for the smallest k");

  const std::size_t nk = k_list.size();
  const Integrator proto(cfg, m, NoiseGrid::with_steps(mc.seed, m.period, steps, cfg.n));
  auto task = [&](std::size_t s) {
    const std::uint64_t seed = sample_seed(mc.seed, s);
    const NoiseGrid base = NoiseGrid::with_steps(seed, m.period, steps, cfg.n);
    Integrator on_base = proto.rebind(base);
    Integrator on_shifted = proto.rebind(base.shifted(1));
    const Coeffs xi = make_initial(m, cfg.n, seed).coeffs;
    const std::vector<Coeffs> a = ensemble_endpoints(on_base, xi, starts, t_idx + steps);
    const std::vector<Coeffs> b = ensemble_endpoints(on_shifted, xi, starts, t_idx);
    std::vector<double> out(nk + 1);
    for (std::size_t r = 0; r < nk; ++r) out[r] = squared_distance(a[r], b[r]);
    out[nk] = squared_norm(a[0]);
    return out;
  };
  const auto per_sample = run_samples(mc.samples, mc.workers, task);

  PeriodicityReport rep;
  rep.t = t;
  rep.state_second_moment = estimate_mean(column(per_sample, nk)).mean;
  for (std::size_t r = 0; r < nk; ++r) {
    const MeanEstimate e = estimate_mean(column(per_sample, r));
    rep.rows.push_back({k_list[r], e.mean, e.half_width});
  }
  fit_gaps(rep.rows, rep.state_second_moment, rep.fit, rep.decay_rate);
  return rep;
}

RateReport temporal_rate_experiment(const ModelSpec& m, const SchemeConfig& cfg, const std::vector<double>& h_list,
                                    double t, int k, const MonteCarlo& mc) {
  require_samples(mc);
  if (h_list.size() < 4) throw ConfigError("experiment.h_list: need at least 4 stepsizes");
  if (k < 0) throw ConfigError("experiment.k: must be nonnegative");
  const double h_min = *std::min_element(h_list.begin(), h_list.end());
  const NoiseGrid finest(0, m.period, h_min, cfg.n);
  const std::int64_t m_min = finest.m();

  std::vector<std::size_t> factors;
  for (std::size_t a = 0; a < h_list.size(); ++a) {
    const double ratio = h_list[a] / h_min;
    const double f = std::round(ratio);
    if (std::abs(ratio - f) > 1e-9 * ratio || m_min % static_cast<std::int64_t>(f) != 0) {
      throw ConfigError("experiment.h_list: stepsizes do not nest (h = " + std::to_string(h_list[a]) +
                        " is not a divisor-compatible multiple of " + std::to_string(h_min) + ")");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (factors[b] == static_cast<std::size_t>(f)) throw ConfigError("experiment.h_list: repeated stepsize");
    }
    factors.push_back(static_cast<std::size_t>(f));
  }
  for (std::size_t a = 0; a < h_list.size(); ++a) grid_index(t, h_list[a]);

  const bool exact = m.affine();
  const std::size_t ref_factor = exact ? 1 : 4;
  const std::int64_t m_ref = m_min * static_cast<std::int64_t>(ref_factor);
  const std::int64_t t_ref = grid_index(t, m.period / static_cast<double>(m_ref));
  if (t_ref < -static_cast<std::int64_t>(k) * m_ref) throw ConfigError("experiment.t: target time precedes -k tau");

  const NoiseGrid proto_ref = NoiseGrid::with_steps(mc.seed, m.period, m_ref, cfg.n);
  std::optional<AffineOracle> oracle;
  std::optional<Integrator> fine;
  if (exact) {
    oracle.emplace(m, proto_ref, cfg.n);
  } else {
    SchemeConfig c = cfg;
    c.h = proto_ref.h();
    fine.emplace(c, m, proto_ref);
  }
  std::vector<Integrator> schemes;
  for (std::size_t a = 0; a < h_list.size(); ++a) {
    const NoiseGrid grid = proto_ref.coarsened(factors[a] * ref_factor);
    SchemeConfig c = cfg;
    c.h = grid.h();
    schemes.emplace_back(c, m, grid);
  }

  auto task = [&](std::size_t s) {
    const std::uint64_t seed = sample_seed(mc.seed, s);
    const NoiseGrid ref_grid = NoiseGrid::with_steps(seed, m.period, m_ref, cfg.n);
    GalerkinState x0 = make_initial(m, cfg.n, seed, -static_cast<std::int64_t>(k) * m_ref);
    const Coeffs ref = exact ? oracle->rebind(ref_grid).advance(x0, t_ref).coeffs
                             : fine->rebind(ref_grid).advance(x0, t_ref).coeffs;
    std::vector<double> out(h_list.size());
    for (std::size_t a = 0; a < h_list.size(); ++a) {
      const NoiseGrid grid = ref_grid.coarsened(factors[a] * ref_factor);
      x0.time_index = -static_cast<std::int64_t>(k) * grid.m();
      const GalerkinState x = schemes[a].rebind(grid).advance(x0, grid_index(t, grid.h()));
      out[a] = squared_distance(x.coeffs, ref);
    }
    return out;
  };
  const auto per_sample = run_samples(mc.samples, mc.workers, task);

  RateReport rep;
  rep.sweep = "h";
  rep.t = t;
  rep.reference = exact ? "exact affine transition on the h = " + std::to_string(h_min) + " grid"
                        : "scheme at h = " + std::to_string(h_min / 4.0) + " on the same noise";
  for (std::size_t a = 0; a < h_list.size(); ++a) rep.rows.push_back(rate_row(h_list[a], column(per_sample, a)));
  fit_rates(rep, {});
  return rep;
}

RateReport spatial_rate_experiment(const ModelSpec& m, const SchemeConfig& cfg, const std::vector<std::size_t>& n_list,
                                   std::size_t n_ref, double t, int k, const MonteCarlo& mc) {
  require_samples(mc);
  if (n_list.size() < 4) throw ConfigError("experiment.n_list: need at least 4 truncations");
  for (std::size_t a = 0; a < n_list.size(); ++a) {
    if (n_list[a] == 0) throw ConfigError("experiment.n_list: truncations must be positive");
    if (a > 0 && n_list[a] <= n_list[a - 1]) throw ConfigError("experiment.n_list: must be strictly increasing");
  }
  if (n_ref < n_list.back()) throw ConfigError("experiment.n_ref: must be at least max(n_list)");
  if (n_ref > m.op.max_modes()) throw ConfigError("experiment.n_ref: exceeds the eigenvalue table");
  if (k < 0) throw ConfigError("experiment.k: must be nonnegative");
  const NoiseGrid probe(0, m.period, cfg.h, n_ref);
  const std::int64_t steps = probe.m();
  const std::int64_t t_idx = grid_index(t, probe.h());
  const std::int64_t start = -static_cast<std::int64_t>(k) * steps;
  if (t_idx < start) throw ConfigError("experiment.t: target time precedes -k tau");

  const NoiseGrid proto_grid = NoiseGrid::with_steps(mc.seed, m.period, steps, n_ref);
  SchemeConfig ref_cfg = cfg;
  ref_cfg.n = n_ref;
  const Integrator proto_ref(ref_cfg, m, proto_grid);
  std::vector<Integrator> proto_truncated;
  for (std::size_t n : n_list) {
    SchemeConfig c = cfg;
    c.n = n;
    proto_truncated.emplace_back(c, m, proto_grid);
  }

  auto task = [&](std::size_t s) {
    const std::uint64_t seed = sample_seed(mc.seed, s);
    const NoiseGrid grid = NoiseGrid::with_steps(seed, m.period, steps, n_ref);
    Integrator ref = proto_ref.rebind(grid);
    std::vector<Integrator> truncated;
    truncated.reserve(n_list.size());
    for (const Integrator& p : proto_truncated) truncated.push_back(p.rebind(grid));
    Coeffs x_ref = make_initial(m, n_ref, seed).coeffs;
    std::vector<Coeffs> xs;
    for (std::size_t n : n_list) xs.push_back(project(x_ref, n));
    std::vector<double> dw(n_ref);
    for (std::int64_t j = start; j < t_idx; ++j) {
      ref.increments_into(j, dw);
      ref.step_with_increments(x_ref, j, dw);
      for (std::size_t a = 0; a < n_list.size(); ++a) {
        truncated[a].step_with_increments(xs[a], j, std::span<const double>(dw).first(n_list[a]));
      }
    }
    std::vector<double> out(n_list.size());
    for (std::size_t a = 0; a < n_list.size(); ++a) {
      const std::size_t n = n_list[a];
      out[a] = squared_distance(xs[a], std::span<const double>(x_ref).first(n)) +
               squared_norm(std::span<const double>(x_ref).subspan(n));
    }
    return out;
  };
  const auto per_sample = run_samples(mc.samples, mc.workers, task);

  RateReport rep;
  rep.sweep = "n";
  rep.t = t;
  rep.reference = "scheme with " + std::to_string(n_ref) + " modes on the same noise";
  std::vector<double> lambdas;
  for (std::size_t a = 0; a < n_list.size(); ++a) {
    rep.rows.push_back(rate_row(static_cast<double>(n_list[a]), column(per_sample, a)));
    lambdas.push_back(m.op.eigenvalue(n_list[a]));
  }
  fit_rates(rep, lambdas);
  return rep;
}

}  // namespace rps
