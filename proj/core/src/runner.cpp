#include "rydchain/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "rydchain/analysis.hpp"
#include "rydchain/mps.hpp"
#include "rydchain/units.hpp"

#ifndef RYDCHAIN_VERSION
#define RYDCHAIN_VERSION "0.0.0"
#endif

namespace rydchain {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kMasterProminence = 1e-3;

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json diagnostics_json(const TraceDiagnostics& d) {
  return {{"max_norm_deviation", d.max_norm_deviation},
          {"max_energy_drift", d.max_energy_drift},
          {"min_population", d.min_population},
          {"max_hermiticity_error", d.max_hermiticity_error},
          {"max_probability_error", d.max_probability_error}};
}

bool monte_carlo(const RunConfig& c) {
  return c.backend.shots > 1 || c.backend.d_omega_mhz > 0.0 || c.backend.d_delta_mhz > 0.0 ||
         c.geometry.position_sigma_um > 0.0;
}

// Scale applied to the bare C6 / r^6 matrix by the V12 override; 1 without it.
double override_scale(const RunConfig& config, const InteractionMatrix& bare) {
  if (!config.physics.v12_override_mhz || bare.size() < 2 || bare.V(0, 1) == 0.0) return 1.0;
  return units::mhz_to_angular(*config.physics.v12_override_mhz) / bare.V(0, 1);
}

InteractionMatrix finish_interactions(const RunConfig& config, InteractionMatrix V, double scale) {
  V.V *= scale;
  if (config.backend.interaction_range > 0) V = V.truncated(config.backend.interaction_range);
  return V;
}

NoiseModel noise_model(const RunConfig& c) {
  NoiseModel noise;
  noise.gamma = units::khz_to_angular(c.backend.gamma_khz);
  noise.gamma_c = units::khz_to_angular(c.backend.gamma_c_khz);
  noise.omega0_mhz = c.physics.omega_mhz;
  noise.d_omega_mhz = c.backend.d_omega_mhz;
  noise.delta0_mhz = c.physics.delta_mhz;
  noise.d_delta_mhz = c.backend.d_delta_mhz;
  noise.shots = c.backend.shots;
  noise.seed = c.backend.seed;
  noise.tail_cut = c.backend.tail_cut;
  return noise;
}

KrylovOptions krylov_options(const RunConfig& c) {
  KrylovOptions k;
  k.max_dim = c.backend.krylov_dim;
  k.tol = c.backend.krylov_tol;
  return k;
}

std::optional<BlockadeCensus> configured_census(const RunConfig& c, const ChainGeometry& geom, double r_b) {
  if (!c.census.enabled) return std::nullopt;
  const BlockadeGraph graph = blockade_graph(geom, r_b);
  if (c.geometry.N <= c.census.max_sites) return enumerate_census(graph, c.census.max_sites);
  try {
    const CensusCounts counts = count_only(graph);
    BlockadeCensus census;
    census.N = c.geometry.N;
    census.nu = counts.nu;
    census.D = counts.D;
    census.n_max = static_cast<int>(counts.nu.size()) - 1;
    return census;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUnsupportedGraph) throw;
    return std::nullopt;
  }
}

double census_fraction(const BlockadeCensus& census) {
  double s = 0.0;
  for (std::size_t n = 0; n < census.nu.size(); ++n) s += static_cast<double>(n) * static_cast<double>(census.nu[n]);
  return s / (static_cast<double>(census.N) * static_cast<double>(census.D));
}

json census_json(const std::optional<BlockadeCensus>& census) {
  if (!census) return nullptr;
  return {{"nu", census->nu}, {"D", census->D}, {"n_max", census->n_max}, {"f_R_census", census_fraction(*census)}};
}

double scaling_alpha_of(const RunConfig& c) {
  return scaling_alpha(units::mhz_to_angular(c.physics.omega_mhz), c.physics.c6_ghz_um6,
                       effective_density(c.geometry.theta_deg, c.geometry.d_um));
}

json derived_json(const RunConfig& c, const Simulation* sim) {
  json d;
  d["t_relax_us"] = resolved_t_relax(c);
  d["seed"] = c.backend.seed;
  d["threads"] = c.backend.threads;
  d["monte_carlo"] = monte_carlo(c);
  d["alpha"] = c.physics.omega_mhz > 0.0 ? json(scaling_alpha_of(c)) : json(nullptr);
  d["n_eff_per_um"] = effective_density(c.geometry.theta_deg, c.geometry.d_um);
  if (sim) {
    const Eigen::MatrixXd& V = sim->system.V.V;
    const int N = static_cast<int>(V.rows());
    json v;
    v["V12_MHz"] = N >= 2 ? json(units::angular_to_mhz(V(0, 1))) : json(nullptr);
    v["V13_MHz"] = N >= 3 ? json(units::angular_to_mhz(V(0, 2))) : json(nullptr);
    v["V_max_MHz"] = N >= 2 ? json(units::angular_to_mhz(V.maxCoeff())) : json(nullptr);
    d["interactions"] = v;
    d["r_B_um"] = sim->r_b_um;
    d["census"] = census_json(sim->census);
  }
  return d;
}

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + (dir_ / name).string());
    writer(os);
    os.close();
    if (!os) throw Error(ErrorKind::kIo, "failed writing " + (dir_ / name).string());
    files_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  json listing() const {
    json list = json::array();
    for (const auto& f : files_)
      list.push_back({{"file", f}, {"sha256", sha256_file(dir_ / f)}, {"bytes", fs::file_size(dir_ / f)}});
    return list;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

json steady_json(const SteadyState& s) {
  json j{{"t_relax_us", s.t_relax}, {"t_end_us", s.t_end}, {"samples", s.samples},
         {"f_R_bar", s.f_R_bar},    {"M2_bar", s.M2_bar},   {"P_eq", vector_json(s.P_eq)}};
  if (s.Cm2_eq) j["census_weight"] = s.Cm2_eq->sum();
  return j;
}

json frequency_json(const RunConfig& c, const ObservableTrace& trace) {
  try {
    return dominant_frequency(trace, c.analysis.freq_t0_us.value_or(0.0), c.analysis.freq_t1_us.value_or(c.schedule.t_max_us));
  } catch (const Error&) {
    return nullptr;
  }
}

void write_simulation(OutputSet& out, const RunConfig& c, const Simulation& sim, json& summary) {
  out.write("trace.csv", [&](std::ostream& os) { write_trace_csv(os, sim.trace); });
  if (c.outputs.emit_cm2 && sim.trace.Cm2) out.write("cm2.csv", [&](std::ostream& os) { write_cm2_csv(os, sim.trace); });
  if (!sim.samples.empty()) {
    out.write("shots.csv", [&](std::ostream& os) {
      os << std::setprecision(17) << "shot,omega_MHz,delta_MHz\n";
      for (const auto& s : sim.samples) os << s.shot << ',' << s.omega_mhz << ',' << s.delta_mhz << '\n';
    });
  }
  summary["backend"] = to_string(c.backend.kind);
  summary["diagnostics"] = diagnostics_json(sim.trace.diagnostics);
  summary["dominant_frequency_MHz"] = frequency_json(c, sim.trace);
  summary["census"] = census_json(sim.census);
  try {
    summary["steady"] = steady_json(steady_average(sim.trace, resolved_t_relax(c), c.schedule.t_max_us));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kEmptyWindow) throw;
    summary["steady"] = nullptr;  // run ends before t_relax
  }
  summary["f_R_max"] = *std::max_element(sim.trace.f_R.begin(), sim.trace.f_R.end());
  if (c.analysis.eth) {
    const EthDiagnostics eth = eth_diagnostics(sim.system, c.analysis.eth_site);
    std::ostringstream eig, hist;
    write_eth_csv(eig, hist, eth);
    out.write("eth_eigen.csv", [&](std::ostream& os) { os << eig.str(); });
    out.write("eth_hist.csv", [&](std::ostream& os) { os << hist.str(); });
    summary["eth"] = {{"site", eth.site},
                      {"mean_E", eth.mean_E},
                      {"sigma_E", eth.sigma_E},
                      {"hist_mean", eth.hist_mean},
                      {"hist_sigma", eth.hist_sigma},
                      {"bin_width", eth.bin_width},
                      {"bins", eth.bin_centers.size()},
                      {"diagonal_scatter", diagonal_scatter(eth, eth.mean_E, eth.sigma_E)}};
  }
}

json base_manifest(const RunConfig& c, const std::string& command) {
  return {{"manifest_version", 1},
          {"software", {{"name", "rydchain"}, {"version", software_version()}}},
          {"command", command},
          {"config", to_json(c)}};
}

template <class Body>
Outcome produce(const RunConfig& config, const fs::path& directory, const std::string& command, Body&& body) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(directory);
  Outcome outcome;
  outcome.directory = directory;
  outcome.manifest = base_manifest(config, command);
  OutputSet out(directory);
  const Simulation* sim = nullptr;
  try {
    sim = body(out, outcome.manifest);
    outcome.manifest["status"] = "ok";
  } catch (const Error& e) {
    outcome.exit_code = exit_code(e.kind());
    outcome.manifest["status"] = "failed";
    outcome.manifest["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  } catch (const std::exception& e) {
    outcome.exit_code = kExitFailure;
    outcome.manifest["status"] = "failed";
    outcome.manifest["error"] = {{"kind", "internal"}, {"message", e.what()}};
  }
  try {
    outcome.manifest["derived"] = derived_json(config, sim);
  } catch (const Error&) {
    outcome.manifest["derived"] = nullptr;
  }
  outcome.manifest["outputs"] = out.listing();
  outcome.manifest["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream os(directory / "manifest.json");
  os << outcome.manifest.dump(2) << '\n';
  if (!os) throw Error(ErrorKind::kIo, "cannot write manifest in " + directory.string());
  return outcome;
}

std::string sweep_label(std::size_t index) {
  std::ostringstream os;
  os << "point_" << std::setw(3) << std::setfill('0') << index;
  return os.str();
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigParse:
      return kExitParse;
    case ErrorKind::kValidation:
    case ErrorKind::kInvalidParameter:
    case ErrorKind::kCoincidentAtoms:
    case ErrorKind::kSizeCapExceeded:
    case ErrorKind::kUnsupportedGraph:
    case ErrorKind::kDimensionOverflow:
    case ErrorKind::kInvalidNoise:
    case ErrorKind::kInvalidDt:
      return kExitValidation;
    case ErrorKind::kIo:
      return kExitFailure;
    default:
      return kExitNumerical;
  }
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.seed) config.backend.seed = *o.seed;
  if (o.out_dir) config.outputs.directory = *o.out_dir;
  if (o.threads) config.backend.threads = *o.threads;
}

fs::path output_root(const RunConfig& config) {
  if (!config.outputs.directory.empty()) return config.outputs.directory;
  if (const char* env = std::getenv("RYDCHAIN_OUT"); env && *env) return env;
  return "out";
}

InteractionMatrix configured_interactions(const RunConfig& config, const ChainGeometry& geometry) {
  const InteractionMatrix bare = interaction_matrix(geometry, config.physics.c6_ghz_um6);
  return finish_interactions(config, bare, override_scale(config, bare));
}

SpinSystem configured_system(const RunConfig& config) {
  const ChainGeometry geom = build_chain(config.geometry.N, config.geometry.d_um, config.geometry.theta_deg);
  return {configured_interactions(config, geom), units::mhz_to_angular(config.physics.omega_mhz),
          units::mhz_to_angular(config.physics.delta_mhz)};
}

Simulation simulate(const RunConfig& c) {
  validate(c);
  Simulation sim;
  sim.geometry = build_chain(c.geometry.N, c.geometry.d_um, c.geometry.theta_deg);
  const InteractionMatrix bare = interaction_matrix(sim.geometry, c.physics.c6_ghz_um6);
  const double scale = override_scale(c, bare);
  sim.system = {finish_interactions(c, bare, scale), units::mhz_to_angular(c.physics.omega_mhz),
                units::mhz_to_angular(c.physics.delta_mhz)};
  // Without a drive the blockade scale is taken at the 1 MHz reference.
  const double omega_ref = c.physics.omega_mhz > 0.0 ? sim.system.omega : units::mhz_to_angular(1.0);
  sim.r_b_um = blockade_radius(c.physics.c6_ghz_um6, omega_ref);
  sim.census = configured_census(c, sim.geometry, sim.r_b_um);
  const BlockadeCensus* census = c.outputs.emit_cm2 && sim.census && !sim.census->configs.empty() ? &*sim.census : nullptr;

  if (c.backend.kind == BackendKind::kMps) {
    TebdOptions opt;
    opt.t_max = c.schedule.t_max_us;
    opt.dt_out = c.schedule.dt_out_us;
    opt.omega_dt = c.backend.omega_dt;
    opt.chi_max = c.backend.chi_max;
    opt.tol = c.backend.mps_tol;
    opt.max_sweeps = c.backend.max_sweeps;
    sim.trace = tebd_evolve(sim.system, opt);
    return sim;
  }

  LindbladOptions evo;
  evo.t_max = c.schedule.t_max_us;
  evo.dt_out = c.schedule.dt_out_us;
  evo.krylov = krylov_options(c);
  evo.census = census;
  if (monte_carlo(c)) {
    MonteCarloOptions mc;
    mc.evolution = evo;
    mc.backend = c.backend.kind == BackendKind::kLindblad ? McBackend::kLindblad : McBackend::kStatevec;
    mc.shot_offset = c.backend.shot_offset;
    mc.threads = c.backend.threads;
    if (c.geometry.position_sigma_um > 0.0) {
      mc.sample_interactions = [&c, &sim, scale](std::mt19937_64& rng) {
        const ChainGeometry jittered = jitter_positions(sim.geometry, c.geometry.position_sigma_um, rng);
        return finish_interactions(c, interaction_matrix(jittered, c.physics.c6_ghz_um6), scale);
      };
    }
    MonteCarloResult r = monte_carlo_quench(sim.system, noise_model(c), mc);
    sim.trace = std::move(r.trace);
    sim.samples = std::move(r.samples);
    return sim;
  }
  if (c.backend.kind == BackendKind::kLindblad) {
    sim.trace = lindblad_evolve(sim.system, noise_model(c), evo);
    return sim;
  }
  QuenchOptions q;
  q.t_max = c.schedule.t_max_us;
  q.dt_out = c.schedule.dt_out_us;
  q.method = c.backend.method == "dense" ? PropagationMethod::kDenseEigen : PropagationMethod::kExpmKrylov;
  q.krylov = krylov_options(c);
  q.census = census;
  sim.trace = quench_evolve(sim.system, q);
  return sim;
}

PipelineResult thermalization_pipeline(const RunConfig& c) {
  PipelineResult r;
  r.simulation = simulate(c);
  const ObservableTrace& trace = r.simulation.trace;
  const auto& census = r.simulation.census;
  r.t_relax = resolved_t_relax(c);
  r.steady = steady_average(trace, r.t_relax, c.schedule.t_max_us);

  const int n_max = census ? census->n_max : c.geometry.N;
  Eigen::VectorXd P_eq = r.steady.P_eq.head(n_max + 1);
  if (P_eq.sum() > 0.0) P_eq /= P_eq.sum();
  if (c.physics.omega_mhz == 0.0) {
    // Nothing is ever excited; every ratio comes from the census.
    r.ratios.ratios.assign(n_max, std::numeric_limits<double>::quiet_NaN());
    r.ratios.provenance.assign(n_max, RatioProvenance::kMeasured);
  } else {
    r.ratios = balance_ratios(P_eq, c.master.epsilon);
  }
  if (!r.ratios.complete()) {
    if (!census) throw Error(ErrorKind::kDegenerateDistribution, "undefined ratios and no census to fall back on");
    r.ratios = with_theoretical_fallback(r.ratios, census->nu);
  }

  FitOptions fit;
  fit.t_early = c.master.t_early_us;
  fit.restarts = c.master.restarts;
  fit.seed = c.backend.seed;
  fit.max_rms = c.master.max_rms;
  r.model = fit_rates(trace.times, trace.P, r.ratios, r.simulation.system.omega, c.geometry.N, fit);

  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(n_max + 1);
  P0[0] = 1.0;
  r.master = integrate_master(r.model, P0, trace.times);
  r.running_average = running_average(trace.times, trace.f_R, c.master.running_average_us);
  for (std::size_t k = 0; k < trace.size(); ++k)
    if (trace.times[k] >= r.t_relax - 1e-12)
      r.max_abs_diff = std::max(r.max_abs_diff, std::abs(r.running_average[k] - r.master.f_R[k]));
  r.master_maxima = count_prominent_maxima(r.master.f_R, kMasterProminence, r.master.size());
  if (c.physics.omega_mhz > 0.0) {
    const Eigen::VectorXd pi = stationary_distribution(r.model);
    double f = 0.0;
    for (Eigen::Index n = 0; n < pi.size(); ++n) f += static_cast<double>(n) * pi[n];
    r.master_asymptote = f / c.geometry.N;
  }
  return r;
}

SweepAxis parse_axis(const std::string& spec, const RunConfig& base) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::kValidation, "axis must look like key=v1,v2,...");
  SweepAxis axis;
  axis.key = spec.substr(0, eq);
  std::stringstream ss(spec.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) axis.values.push_back(item);
  }
  if (axis.values.empty()) throw Error(ErrorKind::kValidation, "sweep axis '" + axis.key + "' has no values");
  for (const auto& v : axis.values) {
    RunConfig probe = base;
    set_config_value(probe, axis.key, v);
    validate(probe);
  }
  return axis;
}

Outcome run_to_directory(const RunConfig& config, const fs::path& directory) {
  Simulation sim;
  return produce(config, directory, "run", [&](OutputSet& out, json& manifest) -> const Simulation* {
    sim = simulate(config);
    json summary;
    write_simulation(out, config, sim, summary);
    out.write_json("summary.json", summary);
    manifest["results"] = summary;
    return &sim;
  });
}

Outcome pipeline_to_directory(const RunConfig& config, const fs::path& directory) {
  PipelineResult r;
  return produce(config, directory, "pipeline", [&](OutputSet& out, json& manifest) -> const Simulation* {
    r = thermalization_pipeline(config);
    json summary;
    write_simulation(out, config, r.simulation, summary);
    out.write("master_trace.csv", [&](std::ostream& os) { write_trace_csv(os, r.master); });
    out.write("comparison.csv", [&](std::ostream& os) {
      os << std::setprecision(17) << "t_us,f_R_quantum,f_R_running_avg,f_R_master,diff\n";
      const ObservableTrace& q = r.simulation.trace;
      for (std::size_t k = 0; k < q.size(); ++k)
        os << q.times[k] << ',' << q.f_R[k] << ',' << r.running_average[k] << ',' << r.master.f_R[k] << ','
           << r.running_average[k] - r.master.f_R[k] << '\n';
    });
    out.write_json("model.json", to_json(r.model));
    summary["master"] = {{"t_relax_us", r.t_relax},
                         {"max_abs_diff_after_relax", r.max_abs_diff},
                         {"prominent_maxima", r.master_maxima},
                         {"asymptote_f_R", r.master_asymptote},
                         {"fit_residual", r.model.fit_residual},
                         {"max_probability_error", r.master.diagnostics.max_probability_error}};
    out.write_json("summary.json", summary);
    manifest["results"] = summary;
    return &r.simulation;
  });
}

Outcome sweep_to_directory(const RunConfig& config, const SweepAxis& axis, const fs::path& directory, bool pipeline) {
  validate(config);
  if (axis.values.empty()) throw Error(ErrorKind::kValidation, "sweep axis has no values");
  const std::size_t points = axis.values.size();
  std::vector<RunConfig> configs(points, config);
  for (std::size_t i = 0; i < points; ++i) {
    set_config_value(configs[i], axis.key, axis.values[i]);
    validate(configs[i]);
  }
  fs::create_directories(directory);
  const auto start = std::chrono::steady_clock::now();

  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.backend.threads), points));
  for (auto& c : configs) c.backend.threads = std::max(1, config.backend.threads / std::max(workers, 1));
  std::vector<Outcome> outcomes(points);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points; i = next++) {
      const fs::path dir = directory / sweep_label(i);
      outcomes[i] = pipeline ? pipeline_to_directory(configs[i], dir) : run_to_directory(configs[i], dir);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  // Ordered reduce.
  OutputSet out(directory);
  std::vector<ScalingPoint> scaling;
  std::set<double> alphas;
  int succeeded = 0;
  int first_failure = kExitOk;
  out.write("aggregate.csv", [&](std::ostream& os) {
    os << std::setprecision(17)
       << "index,value,status,exit_code,N,theta_deg,omega_MHz,alpha,f_R_bar,dominant_frequency_MHz,f_R_census\n";
    for (std::size_t i = 0; i < points; ++i) {
      const RunConfig& c = configs[i];
      const Outcome& o = outcomes[i];
      const bool ok = o.exit_code == kExitOk;
      const json results = o.manifest.value("results", json::object());
      auto field = [&](const json& j) -> std::string {
        if (j.is_null()) return "";
        std::ostringstream s;
        s << std::setprecision(17) << j.get<double>();
        return s.str();
      };
      const json steady = ok ? results.value("steady", json(nullptr)) : json(nullptr);
      const json f_bar = steady.is_object() ? steady.at("f_R_bar") : json(nullptr);
      const json freq = ok ? results.value("dominant_frequency_MHz", json(nullptr)) : json(nullptr);
      const json census = ok ? results.value("census", json(nullptr)) : json(nullptr);
      const json f_census = census.is_object() ? census.at("f_R_census") : json(nullptr);
      const json alpha = c.physics.omega_mhz > 0.0 ? json(scaling_alpha_of(c)) : json(nullptr);
      os << i << ",\"" << axis.values[i] << "\"," << (ok ? "ok" : "failed") << ',' << o.exit_code << ','
         << c.geometry.N << ',' << c.geometry.theta_deg << ',' << c.physics.omega_mhz << ',' << field(alpha) << ','
         << field(f_bar) << ',' << field(freq) << ',' << field(f_census) << '\n';
      if (ok) {
        ++succeeded;
        if (!alpha.is_null() && !f_bar.is_null() && f_bar.get<double>() > 0.0) {
          scaling.push_back({alpha.get<double>(), f_bar.get<double>(), c.geometry.theta_deg, c.geometry.N});
          alphas.insert(alpha.get<double>());
        }
      } else if (first_failure == kExitOk) {
        first_failure = o.exit_code;
      }
    }
  });
  json scaling_result = nullptr;
  if (alphas.size() >= 3) {
    const ScalingFit fit = scaling_fit(scaling);
    scaling_result = to_json(fit);
    json pts = json::array();
    for (const auto& p : scaling) pts.push_back({{"alpha", p.alpha}, {"f_R_bar", p.f_R_bar}, {"theta_deg", p.theta_deg}, {"N", p.N}});
    scaling_result["data"] = pts;
    out.write_json("scaling.json", scaling_result);
  }

  Outcome outcome;
  outcome.directory = directory;
  outcome.exit_code = succeeded > 0 ? kExitOk : first_failure;
  outcome.manifest = base_manifest(config, pipeline ? "sweep-pipeline" : "sweep");
  outcome.manifest["axis"] = {{"key", axis.key}, {"values", axis.values}};
  json pts = json::array();
  for (std::size_t i = 0; i < points; ++i)
    pts.push_back({{"directory", sweep_label(i)},
                   {"value", axis.values[i]},
                   {"exit_code", outcomes[i].exit_code},
                   {"status", outcomes[i].manifest.value("status", "failed")}});
  outcome.manifest["points"] = pts;
  outcome.manifest["status"] = succeeded == static_cast<int>(points) ? "ok" : (succeeded > 0 ? "partial" : "failed");
  outcome.manifest["scaling"] = scaling_result;
  outcome.manifest["outputs"] = out.listing();
  outcome.manifest["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream os(directory / "sweep.json");
  os << outcome.manifest.dump(2) << '\n';
  if (!os) throw Error(ErrorKind::kIo, "cannot write sweep manifest in " + directory.string());
  return outcome;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error(ErrorKind::kIo, "sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string software_version() { return RYDCHAIN_VERSION; }

}  // namespace rydchain
