#pragma once

// Run configuration: one JSON document with model, scheme and experiment
// sections, plus seed and output directory.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rps/integrator.hpp"
#include "rps/model.hpp"

namespace rps {

struct ExperimentConfig {
  double t = 0.0;                  ///< evaluation time, a grid time
  std::vector<int> k_list{1, 2, 3, 5, 10, 20, 40};
  int k = 2;                       ///< pull-back depth for rate sweeps
  std::vector<double> h_list{1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  std::vector<std::size_t> n_list{4, 8, 16, 32};
  std::size_t n_ref = 128;
  std::size_t samples = 1000;
  unsigned workers = 1;
  int periods = 20;                ///< simulate: path length in periods
};

struct RunConfig {
  ModelSpec model;
  SchemeConfig scheme;
  ExperimentConfig experiment;
  std::uint64_t seed = 42;
  std::string output_dir = "out";
};

/// The shipped default: affine drift with sine forcing, time-modulated
/// noise with q = 0.26, H^1-regular random initial data, tau = 1.
ModelSpec default_model();
RunConfig default_config();

/// Parses JSON text. Missing keys take their defaults, unknown keys are
/// rejected. Throws ConfigError naming the offending field, also for the
/// cross-field constraints (tau / h integral, nested h_list, increasing
/// n_list, grid-aligned t).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Checks the cross-field constraints of an assembled configuration.
void check_config(const RunConfig& cfg);

/// Pretty JSON; parse_config(to_json_text(c)) reproduces c exactly.
std::string to_json_text(const RunConfig& cfg);

/// Compact, key-sorted JSON of everything that affects results (the
/// output directory and worker count are left out).
std::string canonical_text(const RunConfig& cfg);

/// 16 hex digits of FNV-1a over canonical_text.
std::string config_hash(const RunConfig& cfg);

}  // namespace rps
