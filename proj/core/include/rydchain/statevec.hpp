#pragma once

#include <Eigen/Core>

#include <limits>
#include <optional>

#include "rydchain/census.hpp"
#include "rydchain/hamiltonian.hpp"
#include "rydchain/krylov.hpp"
#include "rydchain/trace.hpp"

namespace rydchain {

enum class PropagationMethod { kExpmKrylov, kDenseEigen };

struct QuenchOptions {
  double t_max = 3.0;
  double dt_out = 0.02;
  PropagationMethod method = PropagationMethod::kExpmKrylov;
  KrylovOptions krylov{};
  int dense_cap = kMaxDenseSites;
  /// Defaults to |down ... down> (basis index 0).
  std::optional<Eigen::VectorXcd> initial_state;
  /// When set, |C_m|^2 is recorded for every listed configuration.
  const BlockadeCensus* census = nullptr;
};

/// Unitary evolution of the noiseless chain with observables sampled on the
/// output grid.
ObservableTrace quench_evolve(const SpinSystem& sys, const QuenchOptions& options = {});

struct ExcitationDistribution {
  Eigen::VectorXd P;    // n = 0 .. N
  Eigen::VectorXd Cm2;  // one entry per census configuration (empty without census)
};

ExcitationDistribution excitation_distribution(const Eigen::VectorXcd& state, int N,
                                               const BlockadeCensus* census = nullptr);

struct SteadyState {
  double t_relax = 0.0;
  double t_end = 0.0;
  int samples = 0;
  double f_R_bar = 0.0;
  double M2_bar = 0.0;
  Eigen::VectorXd P_eq;
  std::optional<Eigen::VectorXd> Cm2_eq;
};

/// Arithmetic means over samples with t_relax <= t <= t_end.
SteadyState steady_average(const ObservableTrace& trace, double t_relax,
                           double t_end = std::numeric_limits<double>::infinity());

/// Default averaging start: 2 us for the straight chain, 1.5 us at 60 degrees,
/// linear in theta in between (and held constant outside).
double default_t_relax(double theta_deg);

struct Spectrum {
  Eigen::VectorXd energies;  // ascending
  Eigen::MatrixXd vectors;   // columns orthonormal
};

Spectrum full_spectrum(const SpinSystem& sys, int dense_cap = kMaxDenseSites);

}  // namespace rydchain
