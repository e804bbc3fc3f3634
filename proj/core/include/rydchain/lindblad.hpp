#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rydchain/census.hpp"
#include "rydchain/hamiltonian.hpp"
#include "rydchain/krylov.hpp"
#include "rydchain/trace.hpp"

namespace rydchain {

/// Dephasing rates are angular (rad/us). Lorentzian centres and half-widths
/// are ordinary frequencies in MHz.
struct NoiseModel {
  double gamma = 0.0;
  double gamma_c = 0.0;
  double omega0_mhz = 1.0;
  double d_omega_mhz = 0.0;
  double delta0_mhz = 0.0;
  double d_delta_mhz = 0.0;
  int shots = 1;
  std::uint64_t seed = 0;
  double tail_cut = 20.0;  // in half-widths
};

/// Throws invalid-noise for negative rates or widths, shots < 1 or tail_cut <= 0.
void validate(const NoiseModel& noise);

inline constexpr int kMaxDensitySites = 10;

struct LindbladOptions {
  double t_max = 3.0;
  double dt_out = 0.02;
  KrylovOptions krylov{};
  int max_sites = kMaxDensitySites;
  const BlockadeCensus* census = nullptr;
};

/// Matrix-free Liouvillian acting on rho stored column-major (index a + b*dim).
class Liouvillian {
 public:
  Liouvillian(const SpinSystem& sys, double gamma, double gamma_c);

  Eigen::Index dimension() const { return dim_; }
  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  double norm_bound() const { return norm_bound_; }

 private:
  int n_;
  Eigen::Index dim_;
  double half_omega_;
  Eigen::VectorXcd rate_;  // elementwise part: -i(E_a - E_b) - dephasing
  double norm_bound_;
};

/// Density-matrix evolution from |down...down><down...down| under the
/// system Hamiltonian with individual (gamma) and collective (gamma_c)
/// sigma_z dephasing. Width and shot fields of `noise` are ignored.
ObservableTrace lindblad_evolve(const SpinSystem& sys, const NoiseModel& noise, const LindbladOptions& options = {});

enum class McBackend { kLindblad, kStatevec };

struct ShotSample {
  std::uint64_t shot = 0;
  double omega_mhz = 0.0;
  double delta_mhz = 0.0;
};

struct MonteCarloOptions {
  LindbladOptions evolution{};
  McBackend backend = McBackend::kLindblad;
  /// First shot index; runs over disjoint ranges combine linearly.
  std::uint64_t shot_offset = 0;
  int threads = 1;
  /// Optional per-shot interaction sampler (positional disorder). Draws from
  /// the shot's own stream after (Omega, Delta).
  std::function<InteractionMatrix(std::mt19937_64&)> sample_interactions;
};

struct MonteCarloResult {
  ObservableTrace trace;
  std::vector<ShotSample> samples;
};

/// Independent stream for one shot, a pure function of (seed, shot).
std::mt19937_64 shot_stream(std::uint64_t seed, std::uint64_t shot);

/// Lorentzian draw restricted to |x - x0| <= tail_cut * hw; a zero half-width
/// returns the centre.
double truncated_lorentzian(std::mt19937_64& rng, double x0, double hw, double tail_cut);

ShotSample sample_shot(const NoiseModel& noise, std::uint64_t shot, std::mt19937_64& rng);

/// Shot-averaged trace. `sys.omega` and `sys.delta` are replaced per shot by
/// the sampled values; statevec shots ignore the dephasing rates.
MonteCarloResult monte_carlo_quench(const SpinSystem& sys, const NoiseModel& noise, const MonteCarloOptions& options = {});

}  // namespace rydchain
