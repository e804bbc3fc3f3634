#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rydchain/census.hpp"
#include "rydchain/config.hpp"
#include "rydchain/error.hpp"
#include "rydchain/geometry.hpp"
#include "rydchain/hamiltonian.hpp"
#include "rydchain/lindblad.hpp"
#include "rydchain/master_equation.hpp"
#include "rydchain/statevec.hpp"
#include "rydchain/trace.hpp"

namespace rydchain {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // I/O and anything unclassified
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind);

/// Command-line overrides applied on top of a loaded configuration.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// outputs.directory, else $RYDCHAIN_OUT, else "out".
std::filesystem::path output_root(const RunConfig& config);

/// Everything a backend run produces before any file is written.
struct Simulation {
  ChainGeometry geometry;
  SpinSystem system;
  double r_b_um = 0.0;
  std::optional<BlockadeCensus> census;
  ObservableTrace trace;
  std::vector<ShotSample> samples;  // Monte-Carlo runs only
};

/// Interaction matrix for the configured geometry, including the V12 override
/// and the optional range truncation.
InteractionMatrix configured_interactions(const RunConfig& config, const ChainGeometry& geometry);
SpinSystem configured_system(const RunConfig& config);

Simulation simulate(const RunConfig& config);

struct PipelineResult {
  Simulation simulation;
  SteadyState steady;
  BalanceRatios ratios;
  MasterEquationModel model;
  ObservableTrace master;
  std::vector<double> running_average;
  double t_relax = 0.0;
  double max_abs_diff = 0.0;  // |running average - master| for t >= t_relax
  int master_maxima = 0;      // prominent interior maxima before the plateau
  double master_asymptote = 0.0;
};

/// quench -> steady average -> detailed-balance ratios -> early-time fit ->
/// master-equation integration, truncated to the census excitation range.
PipelineResult thermalization_pipeline(const RunConfig& config);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Parses "key=v1,v2,..." and checks the key and each value against a
/// template; throws validation for an empty list.
SweepAxis parse_axis(const std::string& spec, const RunConfig& base);

struct Outcome {
  int exit_code = kExitOk;
  std::filesystem::path directory;
  nlohmann::json manifest;
};

/// Each writes into `directory` (created if needed) and always leaves a
/// manifest.json, with status and diagnostics, once the config is valid.
Outcome run_to_directory(const RunConfig& config, const std::filesystem::path& directory);
Outcome pipeline_to_directory(const RunConfig& config, const std::filesystem::path& directory);
/// Per-point subdirectories point_NNN, points run on up to backend.threads
/// workers, aggregate.csv and sweep.json written after an ordered reduce.
Outcome sweep_to_directory(const RunConfig& config, const SweepAxis& axis, const std::filesystem::path& directory,
                           bool pipeline = false);

std::string sha256_file(const std::filesystem::path& path);
std::string software_version();

}  // namespace rydchain
