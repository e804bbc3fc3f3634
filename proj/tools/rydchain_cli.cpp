#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

#include "rydchain/census.hpp"
#include "rydchain/error.hpp"
#include "rydchain/geometry.hpp"
#include "rydchain/runner.hpp"
#include "rydchain/units.hpp"

namespace {

using namespace rydchain;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;

  Overrides overrides() const { return {seed, out_dir, threads}; }
};

void report(const Outcome& o) {
  std::cout << o.directory.string() << ": " << o.manifest.value("status", "unknown");
  if (o.manifest.contains("error")) std::cout << " (" << o.manifest["error"].value("message", "") << ")";
  std::cout << '\n';
}

int census_command(int N, double theta, double d_um, double c6, double omega_mhz, bool configs) {
  const ChainGeometry geom = build_chain(N, d_um, theta);
  const double r_b = blockade_radius(c6, units::mhz_to_angular(omega_mhz));
  const BlockadeGraph graph = blockade_graph(geom, r_b);
  nlohmann::json j;
  if (N <= kDefaultCensusCap) {
    j = to_json(enumerate_census(graph), theta, configs);
  } else {
    const CensusCounts counts = count_only(graph);
    j = {{"N", N}, {"theta_deg", theta}, {"nu", counts.nu}, {"D", counts.D}};
  }
  j["r_B_um"] = r_b;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quench dynamics and thermalization analysis for Rydberg atom chains"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--seed", flags.seed, "Override backend.seed");
  app.add_option("--out-dir", flags.out_dir, "Override outputs.directory");
  app.add_option("--threads", flags.threads, "Override backend.threads")->check(CLI::PositiveNumber);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one quench and write its trace");
  run->add_option("config", config_path, "Configuration file")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Quench followed by master-equation construction");
  pipeline->add_option("config", config_path, "Configuration file")->required();

  std::string axis_spec;
  bool sweep_pipeline = false;
  auto* sweep = app.add_subcommand("sweep", "Repeat a run over one parameter axis");
  sweep->add_option("config", config_path, "Template configuration file")->required();
  sweep->add_option("--axis", axis_spec, "key=v1,v2,...")->required();
  sweep->add_flag("--pipeline", sweep_pipeline, "Run the full pipeline at every point");

  int census_n = 0;
  double census_theta = 180.0, census_d = 4.0, census_c6 = 470.0, census_omega = 1.0;
  bool census_configs = false;
  auto* census = app.add_subcommand("census", "Count blockade-allowed configurations");
  census->add_option("--N", census_n, "Number of atoms")->required()->check(CLI::PositiveNumber);
  census->add_option("--theta", census_theta, "Chain angle in degrees")->capture_default_str();
  census->add_option("--d", census_d, "Spacing in um")->capture_default_str();
  census->add_option("--c6", census_c6, "C6 in GHz um^6")->capture_default_str();
  census->add_option("--omega", census_omega, "Rabi frequency in MHz")->capture_default_str();
  census->add_flag("--configs", census_configs, "List every allowed configuration");

  for (auto* sub : {run, pipeline, sweep, census}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (census->parsed()) return census_command(census_n, census_theta, census_d, census_c6, census_omega, census_configs);

    RunConfig config = load_config(config_path);
    apply_overrides(config, flags.overrides());
    validate(config);
    const std::filesystem::path root = output_root(config);
    Outcome outcome;
    if (run->parsed()) {
      outcome = run_to_directory(config, root);
    } else if (pipeline->parsed()) {
      outcome = pipeline_to_directory(config, root);
    } else {
      const SweepAxis axis = parse_axis(axis_spec, config);
      outcome = sweep_to_directory(config, axis, root, sweep_pipeline);
    }
    report(outcome);
    return outcome.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
