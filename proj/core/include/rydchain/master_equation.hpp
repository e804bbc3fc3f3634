#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <vector>

#include "rydchain/trace.hpp"

namespace rydchain {

enum class RatioProvenance { kMeasured, kTheoretical };

/// r_n = Gamma_{n->n-1} / Gamma_{n-1->n} for n = 1..n_max (stored at n - 1).
/// Undefined entries hold NaN until a fallback is applied.
struct BalanceRatios {
  std::vector<double> ratios;
  std::vector<RatioProvenance> provenance;

  int n_max() const { return static_cast<int>(ratios.size()); }
  bool complete() const;
};

inline constexpr double kBalanceEpsilon = 1e-6;

/// r_n = P_{n-1} / P_n wherever both entries exceed eps. Throws
/// degenerate-distribution with fewer than two entries above eps.
BalanceRatios balance_ratios(const Eigen::VectorXd& P_eq, double eps = kBalanceEpsilon);

/// Fills undefined entries with nu_{n-1} / nu_n and marks them theoretical.
BalanceRatios with_theoretical_fallback(const BalanceRatios& measured, const std::vector<std::uint64_t>& nu);

/// Birth-death model with Gamma_{n->n+-1}(t) = 2 Omega^2 t T_{n->n+-1}.
struct MasterEquationModel {
  int atoms = 0;
  int n_max = 0;
  double omega = 0.0;  // rad/us
  std::vector<double> T_up;    // T_{n->n+1}, n = 0..n_max-1
  std::vector<double> T_down;  // T_{n->n-1}, n = 1..n_max (stored at n - 1)
  BalanceRatios ratios;
  double fit_residual = 0.0;  // RMS over the fitted window
};

/// Model from T_up and complete ratios: T_down[n-1] = T_up[n-1] * r_n.
MasterEquationModel make_model(int atoms, double omega, std::vector<double> T_up, const BalanceRatios& ratios);

/// Time-independent generator Q with dP/ds = Q P, s = Omega^2 t^2.
Eigen::MatrixXd generator(const MasterEquationModel& model);

/// Fixed point of the birth-death chain, normalized.
Eigen::VectorXd stationary_distribution(const MasterEquationModel& model);

/// P(t) = exp(Q Omega^2 t^2) P0, exact for the linear-in-t rates.
ObservableTrace integrate_master(const MasterEquationModel& model, const Eigen::VectorXd& P0,
                                 const std::vector<double>& times);

struct FitOptions {
  double t_early = 0.3;
  int restarts = 5;
  std::uint64_t seed = 0;
  double max_rms = 0.15;
  int min_samples = 5;
};

/// Least-squares T_up against the early-time P_n(t) (columns beyond n_max are
/// ignored) with T_down tied to the ratios. `times` must start at 0 with P_0 = 1.
MasterEquationModel fit_rates(const std::vector<double>& times, const Eigen::MatrixXd& P, const BalanceRatios& ratios,
                              double omega, int atoms, const FitOptions& options = {});

nlohmann::json to_json(const MasterEquationModel& model);

}  // namespace rydchain
