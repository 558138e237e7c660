#include "rps/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "rps/errors.hpp"
#include "rps/experiments.hpp"
#include "rps/hashing.hpp"
#include "rps/noise.hpp"

namespace rps {

using nlohmann::json;

ModelSpec default_model() {
  ModelSpec m;
  m.drift.family = DriftFamily::Affine;
  m.drift.dissipation = 1.0;
  m.drift.gain = 0.0;
  m.drift.forcing = 0.15;
  m.drift.forcing_mode = 1;
  m.drift.profile.shape = PeriodicProfile::Shape::Sine;
  m.noise.sigma = 1.0;
  m.noise.decay = 0.26;
  m.noise.epsilon = 0.1;
  m.noise.profile.shape = PeriodicProfile::Shape::Sine;
  m.initial.family = InitialFamily::HrRandom;
  m.initial.amplitude = 1.0;
  m.initial.extra_decay = 0.01;
  m.regularity = 1.0;
  return with_period(m, 1.0);
}

RunConfig default_config() {
  RunConfig c;
  c.model = default_model();
  return c;
}

namespace {

const char* shape_name(PeriodicProfile::Shape s) { return s == PeriodicProfile::Shape::Sine ? "sine" : "constant"; }

const char* initial_name(InitialFamily f) {
  switch (f) {
    case InitialFamily::Zero: return "zero";
    case InitialFamily::SingleMode: return "single_mode";
    case InitialFamily::HrRandom: return "hr_random";
  }
  return "zero";
}

json model_json(const ModelSpec& m) {
  json op;
  if (m.op.kind() == OperatorKind::Table) {
    op["family"] = "table";
    op["eigenvalues"] = m.op.table();
  } else {
    op["family"] = "dirichlet_laplacian";
  }
  json j;
  j["operator"] = op;
  j["period"] = m.period;
  j["regularity"] = m.regularity;
  if (m.alpha) j["alpha"] = *m.alpha;
  j["drift"] = {{"family", m.drift.family == DriftFamily::Affine ? "affine" : "tanh"},
                {"dissipation", m.drift.dissipation},
                {"gain", m.drift.gain},
                {"forcing", m.drift.forcing},
                {"forcing_mode", m.drift.forcing_mode},
                {"profile", shape_name(m.drift.profile.shape)}};
  j["noise"] = {{"sigma", m.noise.sigma},
                {"decay", m.noise.decay},
                {"epsilon", m.noise.epsilon},
                {"profile", shape_name(m.noise.profile.shape)}};
  j["initial"] = {{"family", initial_name(m.initial.family)},
                  {"mode", m.initial.mode},
                  {"value", m.initial.value},
                  {"amplitude", m.initial.amplitude},
                  {"extra_decay", m.initial.extra_decay}};
  return j;
}

json full_json(const RunConfig& c, bool for_hash) {
  json j;
  j["model"] = model_json(c.model);
  j["scheme"] = {{"variant", to_string(c.scheme.variant)},
                 {"h", c.scheme.h},
                 {"n", c.scheme.n},
                 {"tolerance", c.scheme.tolerance},
                 {"max_iterations", c.scheme.max_iterations}};
  const ExperimentConfig& e = c.experiment;
  j["experiment"] = {{"t", e.t},         {"k_list", e.k_list},   {"k", e.k},
                     {"h_list", e.h_list}, {"n_list", e.n_list}, {"n_ref", e.n_ref},
                     {"samples", e.samples}, {"periods", e.periods}};
  if (!for_hash) j["experiment"]["workers"] = e.workers;
  j["seed"] = c.seed;
  if (!for_hash) j["output_dir"] = c.output_dir;
  return j;
}

/// Typed access to one JSON object, with the dotted path kept for messages.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
    for (const auto& item : j_.items()) {
      if (!allowed.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const { return j_.at(key); }
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const char* key, double def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const char* key, std::uint64_t def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    throw ConfigError(where(key) + ": expected a nonnegative integer");
  }

  std::int64_t integer(const char* key, std::int64_t def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }

  std::string text(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  template <class T>
  std::vector<T> list(const char* key, const std::vector<T>& def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    std::vector<T> out;
    for (const json& e : v) {
      if constexpr (std::is_floating_point_v<T>) {
        if (!e.is_number()) throw ConfigError(where(key) + ": expected numbers");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
          throw ConfigError(where(key) + ": expected nonnegative integers");
        }
      } else {
        if (!e.is_number_integer()) throw ConfigError(where(key) + ": expected integers");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

PeriodicProfile::Shape parse_shape(const Section& s, const char* key, PeriodicProfile::Shape def) {
  const std::string v = s.text(key, shape_name(def));
  if (v == "sine") return PeriodicProfile::Shape::Sine;
  if (v == "constant") return PeriodicProfile::Shape::Constant;
  throw ConfigError(s.where(key) + ": expected \"sine\" or \"constant\", got \"" + v + "\"");
}

double positive(const Section& s, const char* key, double def) {
  const double v = s.number(key, def);
  if (!(v > 0.0)) throw ConfigError(s.where(key) + ": must be positive");
  return v;
}

double nonnegative(const Section& s, const char* key, double def) {
  const double v = s.number(key, def);
  if (!(v >= 0.0)) throw ConfigError(s.where(key) + ": must be nonnegative");
  return v;
}

ModelSpec parse_model(const json& j, const ModelSpec& def) {
  const Section s(j, "model", {"operator", "period", "regularity", "alpha", "drift", "noise", "initial"});
  ModelSpec m = def;

  if (s.has("operator")) {
    const Section op(s.raw("operator"), "model.operator", {"family", "eigenvalues"});
    const std::string family = op.text("family", "dirichlet_laplacian");
    if (family == "dirichlet_laplacian") {
      if (op.has("eigenvalues")) throw ConfigError("model.operator.eigenvalues: only allowed for family \"table\"");
      m.op = SpectralOperator::dirichlet_laplacian();
    } else if (family == "table") {
      if (!op.has("eigenvalues")) throw ConfigError("model.operator.eigenvalues: required for family \"table\"");
      try {
        m.op = SpectralOperator::from_table(op.list<double>("eigenvalues", {}));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("model.operator.eigenvalues: ") + e.what());
      }
    } else {
      throw ConfigError("model.operator.family: unknown operator family \"" + family + "\"");
    }
  }

  const double period = positive(s, "period", def.period);
  m.regularity = s.number("regularity", def.regularity);
  if (!(m.regularity > 0.0 && m.regularity <= 1.0)) throw ConfigError("model.regularity: must lie in (0, 1]");
  if (s.has("alpha")) m.alpha = positive(s, "alpha", 0.0);

  if (s.has("drift")) {
    const Section d(s.raw("drift"), "model.drift", {"family", "dissipation", "gain", "forcing", "forcing_mode", "profile"});
    const std::string fam = d.text("family", def.drift.family == DriftFamily::Affine ? "affine" : "tanh");
    if (fam == "affine") m.drift.family = DriftFamily::Affine;
    else if (fam == "tanh") m.drift.family = DriftFamily::ModeDiagonalTanh;
    else throw ConfigError("model.drift.family: expected \"affine\" or \"tanh\", got \"" + fam + "\"");
    m.drift.dissipation = positive(d, "dissipation", def.drift.dissipation);
    m.drift.gain = nonnegative(d, "gain", def.drift.gain);
    m.drift.forcing = d.number("forcing", def.drift.forcing);
    m.drift.forcing_mode = d.unsigned_int("forcing_mode", def.drift.forcing_mode);
    if (m.drift.forcing_mode == 0) throw ConfigError("model.drift.forcing_mode: modes are numbered from 1");
    m.drift.profile.shape = parse_shape(d, "profile", def.drift.profile.shape);
  }

  if (s.has("noise")) {
    const Section n(s.raw("noise"), "model.noise", {"sigma", "decay", "epsilon", "profile"});
    m.noise.sigma = nonnegative(n, "sigma", def.noise.sigma);
    m.noise.decay = nonnegative(n, "decay", def.noise.decay);
    m.noise.epsilon = nonnegative(n, "epsilon", def.noise.epsilon);
    if (!(m.noise.epsilon < 1.0)) throw ConfigError("model.noise.epsilon: must be below 1");
    m.noise.profile.shape = parse_shape(n, "profile", def.noise.profile.shape);
  }

  if (s.has("initial")) {
    const Section in(s.raw("initial"), "model.initial", {"family", "mode", "value", "amplitude", "extra_decay"});
    const std::string fam = in.text("family", initial_name(def.initial.family));
    if (fam == "zero") m.initial.family = InitialFamily::Zero;
    else if (fam == "single_mode") m.initial.family = InitialFamily::SingleMode;
    else if (fam == "hr_random") m.initial.family = InitialFamily::HrRandom;
    else throw ConfigError("model.initial.family: expected zero, single_mode or hr_random, got \"" + fam + "\"");
    m.initial.mode = in.unsigned_int("mode", def.initial.mode);
    if (m.initial.mode == 0) throw ConfigError("model.initial.mode: modes are numbered from 1");
    m.initial.value = in.number("value", def.initial.value);
    m.initial.amplitude = nonnegative(in, "amplitude", def.initial.amplitude);
    m.initial.extra_decay = positive(in, "extra_decay", def.initial.extra_decay);
  }
  return with_period(m, period);
}

SchemeConfig parse_scheme(const json& j, const SchemeConfig& def) {
  const Section s(j, "scheme", {"variant", "h", "n", "tolerance", "max_iterations"});
  SchemeConfig c = def;
  const std::string v = s.text("variant", to_string(def.variant));
  if (v == "implicit") c.variant = SchemeVariant::Implicit;
  else if (v == "explicit") c.variant = SchemeVariant::Explicit;
  else throw ConfigError("scheme.variant: expected \"implicit\" or \"explicit\", got \"" + v + "\"");
  c.h = positive(s, "h", def.h);
  c.n = s.unsigned_int("n", def.n);
  if (c.n == 0) throw ConfigError("scheme.n: must be at least 1");
  c.tolerance = positive(s, "tolerance", def.tolerance);
  const std::int64_t it = s.integer("max_iterations", def.max_iterations);
  if (it < 1 || it > 1000000) throw ConfigError("scheme.max_iterations: must lie in [1, 1e6]");
  c.max_iterations = static_cast<int>(it);
  return c;
}

ExperimentConfig parse_experiment(const json& j, const ExperimentConfig& def) {
  const Section s(j, "experiment", {"t", "k_list", "k", "h_list", "n_list", "n_ref", "samples", "workers", "periods"});
  ExperimentConfig e = def;
  e.t = s.number("t", def.t);
  e.k_list = s.list<int>("k_list", def.k_list);
  e.k = static_cast<int>(s.integer("k", def.k));
  e.h_list = s.list<double>("h_list", def.h_list);
  e.n_list = s.list<std::size_t>("n_list", def.n_list);
  e.n_ref = s.unsigned_int("n_ref", def.n_ref);
  e.samples = s.unsigned_int("samples", def.samples);
  e.workers = static_cast<unsigned>(s.unsigned_int("workers", def.workers));
  e.periods = static_cast<int>(s.integer("periods", def.periods));
  return e;
}

}  // namespace

void check_config(const RunConfig& c) {
  const ModelSpec& m = c.model;
  const SchemeConfig& s = c.scheme;
  const ExperimentConfig& e = c.experiment;
  if (s.n > m.op.max_modes()) throw ConfigError("scheme.n: exceeds the number of tabulated eigenvalues");
  if (m.drift.forcing_mode > s.n && m.drift.forcing != 0.0) {
    throw ConfigError("model.drift.forcing_mode: outside the truncation scheme.n");
  }
  NoiseGrid probe(0, m.period, s.h, 1);
  grid_index(e.t, probe.h());

  for (std::size_t i = 0; i < e.k_list.size(); ++i) {
    if (e.k_list[i] < 0) throw ConfigError("experiment.k_list: entries must be nonnegative");
    if (i > 0 && e.k_list[i] <= e.k_list[i - 1]) throw ConfigError("experiment.k_list: must be strictly increasing");
  }
  if (e.k < 0) throw ConfigError("experiment.k: must be nonnegative");
  if (e.samples == 0) throw ConfigError("experiment.samples: must be at least 1");
  if (e.periods < 0) throw ConfigError("experiment.periods: must be nonnegative");

  if (!e.h_list.empty()) {
    double h_min = e.h_list.front();
    for (double h : e.h_list) {
      if (!(h > 0.0)) throw ConfigError("experiment.h_list: stepsizes must be positive");
      h_min = std::min(h_min, h);
    }
    const NoiseGrid finest(0, m.period, h_min, 1);
    for (double h : e.h_list) {
      const double ratio = h / h_min;
      const double f = std::round(ratio);
      if (std::abs(ratio - f) > 1e-9 * ratio || finest.m() % static_cast<std::int64_t>(f) != 0) {
        throw ConfigError("experiment.h_list: stepsizes do not nest on a common refinement of tau");
      }
      grid_index(e.t, h);
    }
  }
  for (std::size_t i = 0; i < e.n_list.size(); ++i) {
    if (e.n_list[i] == 0) throw ConfigError("experiment.n_list: truncations must be positive");
    if (i > 0 && e.n_list[i] <= e.n_list[i - 1]) throw ConfigError("experiment.n_list: must be strictly increasing");
  }
  if (!e.n_list.empty() && e.n_ref < e.n_list.back()) {
    throw ConfigError("experiment.n_ref: must be at least the largest entry of n_list");
  }
  if (e.n_ref > m.op.max_modes()) throw ConfigError("experiment.n_ref: exceeds the number of tabulated eigenvalues");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  const Section top(j, "", {"model", "scheme", "experiment", "seed", "output_dir"});
  RunConfig c = default_config();
  try {
    if (top.has("model")) c.model = parse_model(top.raw("model"), c.model);
    if (top.has("scheme")) c.scheme = parse_scheme(top.raw("scheme"), c.scheme);
    if (top.has("experiment")) c.experiment = parse_experiment(top.raw("experiment"), c.experiment);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.seed = top.unsigned_int("seed", c.seed);
  c.output_dir = top.text("output_dir", c.output_dir);
  check_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json_text(const RunConfig& cfg) { return full_json(cfg, false).dump(2) + "\n"; }

std::string canonical_text(const RunConfig& cfg) { return full_json(cfg, true).dump(); }

std::string config_hash(const RunConfig& cfg) { return to_hex(fnv1a64(canonical_text(cfg))); }

}  // namespace rps
