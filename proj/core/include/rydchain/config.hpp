#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rydchain {

enum class BackendKind { kEd, kLindblad, kMps };

struct GeometryConfig {
  int N = 10;
  double d_um = 4.0;
  double theta_deg = 180.0;
  double position_sigma_um = 0.0;
};

struct PhysicsConfig {
  double omega_mhz = 1.0;
  double delta_mhz = 0.0;
  double c6_ghz_um6 = 470.0;
  std::optional<double> v12_override_mhz = 20.0;  // nullopt keeps the bare C6 / r^6 scale
};

struct BackendConfig {
  BackendKind kind = BackendKind::kEd;
  std::string method = "krylov";  // ed only: krylov | dense
  int krylov_dim = 30;
  double krylov_tol = 1e-10;
  int interaction_range = 0;  // 0 keeps every pair; k keeps |i - j| <= k
  // mps
  double omega_dt = 0.013;
  int chi_max = 64;
  double mps_tol = 1e-10;
  int max_sweeps = 50;
  // noise; shots > 1 or nonzero widths select Monte-Carlo averaging
  int shots = 1;
  std::uint64_t seed = 0;
  std::uint64_t shot_offset = 0;
  double gamma_khz = 0.0;
  double gamma_c_khz = 0.0;
  double d_omega_mhz = 0.0;
  double d_delta_mhz = 0.0;
  double tail_cut = 20.0;
  int threads = 1;
};

struct ScheduleConfig {
  double t_max_us = 3.0;
  double dt_out_us = 0.02;
  std::optional<double> t_relax_us;  // default interpolates in theta
};

struct CensusConfig {
  bool enabled = true;
  int max_sites = 25;
};

struct MasterConfig {
  double t_early_us = 0.3;
  int restarts = 5;
  double max_rms = 0.15;
  double epsilon = 1e-6;
  double running_average_us = 1.0;
};

struct AnalysisConfig {
  std::optional<double> freq_t0_us;  // default 0
  std::optional<double> freq_t1_us;  // default t_max
  bool eth = false;
  int eth_site = -1;
};

struct OutputConfig {
  std::string directory;  // empty: $RYDCHAIN_OUT or ./out
  bool emit_cm2 = false;
};

struct RunConfig {
  GeometryConfig geometry;
  PhysicsConfig physics;
  BackendConfig backend;
  ScheduleConfig schedule;
  CensusConfig census;
  MasterConfig master;
  AnalysisConfig analysis;
  OutputConfig outputs;
};

/// Text grammar, one entry per line:
///   # comment            (also ';' and trailing '#' after whitespace)
///   [section]            prefixes following keys with "section."
///   key = value          dotted keys, values are numbers, true/false,
///                        none, bare words or "quoted strings"
/// JSON input may be nested or flat with dotted keys; a manifest is accepted
/// and its "config" member is used.
///
/// Malformed text raises config-parse; unknown keys, wrong value types and
/// out-of-range values raise validation.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Assigns one dotted key from its textual form (as in the text grammar).
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Every key with its current value, as a flat JSON object.
nlohmann::json to_json(const RunConfig& config);
std::vector<std::string> config_keys();

/// Range checks across all sections; throws validation.
void validate(const RunConfig& config);

std::string to_string(BackendKind kind);
double resolved_t_relax(const RunConfig& config);

}  // namespace rydchain
