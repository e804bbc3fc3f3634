#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <vector>

#include "rydchain/hamiltonian.hpp"
#include "rydchain/trace.hpp"

namespace rydchain {

inline constexpr int kMinSpectralSamples = 16;

/// Frequency (MHz, i.e. cycles per us) of the strongest non-DC periodogram
/// peak of a uniformly sampled series, refined by parabolic interpolation.
double dominant_frequency(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1);
double dominant_frequency(const ObservableTrace& trace, double t0, double t1);

struct ScalingPoint {
  double alpha = 0.0;
  double f_R_bar = 0.0;
  double theta_deg = 0.0;
  int N = 0;
};

/// alpha = (Omega / 2 pi) / (|C6| n_eff^6) with C6 in MHz um^6 and n_eff in 1/um.
double scaling_alpha(double omega, double c6_ghz_um6, double n_eff);

struct ScalingFit {
  double nu = 0.0;
  double intercept = 0.0;
  double stderr_nu = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;  // 95% Student-t interval
  int points = 0;
};

/// Ordinary least squares of log f_R_bar against log alpha.
ScalingFit scaling_fit(const std::vector<ScalingPoint>& points);

struct EthDiagnostics {
  int site = 0;
  Eigen::VectorXd E_alpha;
  Eigen::VectorXd n_diag;   // <alpha| n_site |alpha>
  Eigen::VectorXd weight;   // |<alpha|down...down>|^2
  Eigen::VectorXd bin_centers;
  Eigen::VectorXd rho_mass;  // histogram mass per bin, sums to 1
  double bin_width = 0.0;
  double mean_E = 0.0;
  double sigma_E = 0.0;     // exact, from <H> and <H^2>
  double hist_mean = 0.0;
  double hist_sigma = 0.0;
};

inline constexpr int kMinHistogramBins = 25;

/// Full diagonalization against |down...down>. site < 0 selects (N - 1) / 2.
EthDiagnostics eth_diagnostics(const SpinSystem& sys, int site = -1, int dense_cap = kMaxDenseSites);

/// Sample standard deviation of n_diag over eigenstates with |E - center| <= half_width.
double diagonal_scatter(const EthDiagnostics& eth, double center, double half_width);

void write_eth_csv(std::ostream& eigen_os, std::ostream& hist_os, const EthDiagnostics& eth);
nlohmann::json to_json(const ScalingFit& fit);

/// Trailing mean over (t - window, t]; the first samples average what exists.
std::vector<double> running_average(const std::vector<double>& times, const std::vector<double>& values, double window);

/// Interior local maxima whose prominence over the lower neighbouring minimum
/// exceeds `prominence`, among samples with index < end.
int count_prominent_maxima(const std::vector<double>& values, double prominence, std::size_t end);

struct RabiDecayFit {
  double omega_mhz = 0.0;  // oscillation frequency omega / 2 pi
  double tau_us = 0.0;
  double rms = 0.0;
};

/// Fit f(t) = (1 - cos(omega t) exp(-t / tau)) / (2 N).
RabiDecayFit fit_rabi_decay(const std::vector<double>& times, const std::vector<double>& f, int N);

/// Half the peak-to-peak spread of a series within [t0, t1].
double oscillation_amplitude(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1);

}  // namespace rydchain
