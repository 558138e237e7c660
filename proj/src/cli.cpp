#include "rps/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <sstream>

#include "rps/config.hpp"
#include "rps/errors.hpp"
#include "rps/experiments.hpp"
#include "rps/noise.hpp"

namespace rps {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

using nlohmann::json;

void setup_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_st("rps");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    return true;
  }();
  (void)once;
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("RPS_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
    else spdlog::warn("RPS_LOG={} not recognized, using info", v);
  }
  spdlog::set_level(level);
}

/// JSON number that stays valid for non-finite values.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Outputs {
  std::filesystem::path csv;
  std::filesystem::path json_path;
};

Outputs output_paths(const RunConfig& cfg, const std::string& sub) {
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = sub + "_" + config_hash(cfg);
  return {dir / (stem + ".csv"), dir / (stem + ".json")};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
  if (!f) throw std::runtime_error("failed writing " + p.string());
}

json summary_base(const RunConfig& cfg, const char* subcommand) {
  return {{"subcommand", subcommand},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg.seed},
          {"samples", cfg.experiment.samples}};
}

void add_fit(json& j, const LinearFit& fit) {
  j["slope"] = number_or_null(fit.slope);
  j["intercept"] = number_or_null(fit.intercept);
  j["r_squared"] = number_or_null(fit.r_squared);
  j["fit_points"] = fit.points;
}

std::string gap_csv(const std::vector<GapRow>& rows) {
  std::string csv = "k,estimate,half_width\n";
  for (const GapRow& r : rows) {
    csv += std::to_string(r.k) + "," + format_number(r.estimate) + "," + format_number(r.half_width) + "\n";
  }
  return csv;
}

std::string rate_csv(const RateReport& rep) {
  std::string csv = "sweep_value,error,half_width\n";
  for (const RateRow& r : rep.rows) {
    csv += format_number(r.value) + "," + format_number(r.error) + "," + format_number(r.half_width) + "\n";
  }
  return csv;
}

void emit(const RunConfig& cfg, const char* sub, const std::string& csv, const json& summary, std::ostream& out) {
  const Outputs paths = output_paths(cfg, sub);
  write_file(paths.csv, csv);
  write_file(paths.json_path, summary.dump(2) + "\n");
  out << paths.csv.string() << "\n" << paths.json_path.string() << "\n";
  spdlog::info("{}: wrote {} and {}", sub, paths.csv.string(), paths.json_path.string());
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const ValidationReport rep = validate(cfg.model, cfg.scheme.n, cfg.scheme.h, cfg.scheme.variant);
  for (const ValidationCheck& c : rep.checks) {
    out << (c.passed ? "PASS " : (c.required ? "FAIL " : "WARN ")) << c.name << "  [" << c.relation << "]";
    for (const auto& [name, value] : c.values) out << "  " << name << "=" << format_number(value);
    out << "\n";
  }
  out << "growth_constant=" << format_number(rep.growth_constant) << "\n"
      << "lipschitz=" << format_number(rep.lipschitz) << "\n"
      << "dissipativity=" << format_number(rep.dissipativity) << "\n"
      << "noise_bound=" << format_number(rep.noise_bound) << "\n"
      << "one_step_constant=" << format_number(rep.one_step_constant) << "\n"
      << "suggested_max_h=" << format_number(rep.suggested_max_h) << "\n"
      << "mean_square_bound=" << format_number(rep.mean_square_bound) << "\n"
      << "config_hash=" << config_hash(cfg) << "\n";
  if (rep.passed()) {
    out << "validation passed\n";
    return kExitOk;
  }
  for (const ValidationCheck* c : rep.failures()) out << "failing check: " << c->name << "\n";
  return kExitConfig;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const NoiseGrid grid(cfg.seed, cfg.model.period, cfg.scheme.h, cfg.scheme.n);
  const GalerkinState x0 = make_initial(cfg.model, cfg.scheme.n, cfg.seed, 0);
  const std::int64_t steps = static_cast<std::int64_t>(cfg.experiment.periods) * grid.m();
  const PathSlice path = simulate(cfg.scheme, cfg.model, grid, x0, steps);

  std::string csv = "time_index,time";
  for (std::size_t i = 1; i <= cfg.scheme.n; ++i) csv += ",c" + std::to_string(i);
  csv += "\n";
  for (const GalerkinState& s : path.states) {
    csv += std::to_string(s.time_index) + "," + format_number(static_cast<double>(s.time_index) * grid.h());
    for (double v : s.coeffs) csv += "," + format_number(v);
    csv += "\n";
  }
  json summary = summary_base(cfg, "simulate");
  summary["steps"] = steps;
  summary["variant"] = path.provenance.variant;
  summary["model_hash"] = path.provenance.model_hash;
  summary["final_norm"] = euclidean_norm(path.states.back().coeffs);
  emit(cfg, "simulate", csv, summary, out);
  return kExitOk;
}

MonteCarlo monte_carlo(const RunConfig& cfg) {
  return {cfg.experiment.samples, cfg.seed, std::max(1u, cfg.experiment.workers)};
}

int cmd_pullback(const RunConfig& cfg, std::ostream& out) {
  const PullbackReport rep =
      pullback_experiment(cfg.model, cfg.scheme, cfg.experiment.t, cfg.experiment.k_list, monte_carlo(cfg));
  json summary = summary_base(cfg, "pullback");
  add_fit(summary, rep.fit);
  summary["decay_rate"] = number_or_null(rep.decay_rate);
  summary["t"] = rep.t;
  summary["state_second_moment"] = rep.state_second_moment;
  emit(cfg, "pullback", gap_csv(rep.rows), summary, out);
  return kExitOk;
}

int cmd_periodicity(const RunConfig& cfg, std::ostream& out) {
  const PeriodicityReport rep =
      periodicity_experiment(cfg.model, cfg.scheme, cfg.experiment.t, cfg.experiment.k_list, monte_carlo(cfg));
  json summary = summary_base(cfg, "periodicity");
  add_fit(summary, rep.fit);
  summary["decay_rate"] = number_or_null(rep.decay_rate);
  summary["t"] = rep.t;
  summary["state_second_moment"] = rep.state_second_moment;
  emit(cfg, "periodicity", gap_csv(rep.rows), summary, out);
  return kExitOk;
}

int cmd_rate(const RunConfig& cfg, bool temporal, std::ostream& out) {
  const ExperimentConfig& e = cfg.experiment;
  const RateReport rep =
      temporal ? temporal_rate_experiment(cfg.model, cfg.scheme, e.h_list, e.t, e.k, monte_carlo(cfg))
               : spatial_rate_experiment(cfg.model, cfg.scheme, e.n_list, e.n_ref, e.t, e.k, monte_carlo(cfg));
  const char* sub = temporal ? "rate-h" : "rate-n";
  json summary = summary_base(cfg, sub);
  add_fit(summary, rep.fit);
  summary["sweep"] = rep.sweep;
  summary["reference"] = rep.reference;
  summary["degenerate"] = rep.degenerate;
  summary["t"] = rep.t;
  if (!temporal) summary["slope_vs_log_lambda"] = number_or_null(rep.slope_vs_log_lambda);
  emit(cfg, sub, rate_csv(rep), summary, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  setup_logging();
  CLI::App app{"Random periodic solutions of semilinear SPDEs: spectral Galerkin experiments", "rps_cli"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--seed", seed, "Override the seed");
  app.add_option("--samples", samples, "Override the Monte Carlo sample count");
  app.add_option("--workers", workers, "Worker threads for Monte Carlo sampling");
  app.add_option("--out", out_dir, "Output directory");

  const char* names[] = {"validate", "simulate", "pullback", "periodicity", "rate-h", "rate-n"};
  const char* help[] = {"Check the model assumptions and stepsize conditions",
                        "Write one path as CSV",
                        "Pull-back convergence table",
                        "Random periodicity table",
                        "Strong error against h",
                        "Strong error against n"};
  for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], help[i]);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (samples) cfg.experiment.samples = *samples;
    if (workers) cfg.experiment.workers = *workers;
    if (out_dir) cfg.output_dir = *out_dir;
    check_config(cfg);
    spdlog::debug("config hash {}", config_hash(cfg));

    if (sub == "validate") return cmd_validate(cfg, out);
    if (sub == "simulate") return cmd_simulate(cfg, out);
    if (sub == "pullback") return cmd_pullback(cfg, out);
    if (sub == "periodicity") return cmd_periodicity(cfg, out);
    if (sub == "rate-h") return cmd_rate(cfg, true, out);
    return cmd_rate(cfg, false, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace rps
