#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace rydchain {

/// Worst-case conservation figures seen while producing a trace. Only the
/// fields meaningful for a backend are filled; the others stay at defaults.
struct TraceDiagnostics {
  double max_norm_deviation = 0.0;    // | ||psi|| - 1 |  or  |Tr rho - 1|
  double max_energy_drift = 0.0;      // |<H>(t) - <H>(0)|
  double min_population = 0.0;        // most negative diagonal entry seen
  double max_hermiticity_error = 0.0;
  double max_probability_error = 0.0; // |sum_n P_n - 1|
};

/// Time series of the chain observables. Rows of P and Cm2 follow `times`.
struct ObservableTrace {
  int atoms = 0;
  std::vector<double> times;
  std::vector<double> f_R;
  std::vector<double> M2;
  Eigen::MatrixXd P;  // columns n = 0 .. P.cols()-1
  std::optional<Eigen::MatrixXd> Cm2;
  std::vector<std::uint64_t> cm2_configs;
  TraceDiagnostics diagnostics;

  std::size_t size() const { return times.size(); }
};

/// Output grid 0, dt, 2 dt, ... up to t_max (inclusive when commensurate).
std::vector<double> output_grid(double t_max, double dt_out);

/// Fill f_R and M2 from the number distribution: f_R = sum n P_n / N,
/// M2 = sum n^2 P_n / N^2.
void derive_moments(ObservableTrace& trace);

/// `t_us,f_R,M2,P_0,...,P_k` with full round-trip precision.
void write_trace_csv(std::ostream& os, const ObservableTrace& trace);
/// One row per census configuration: `config,t=...` columns.
void write_cm2_csv(std::ostream& os, const ObservableTrace& trace);

ObservableTrace read_trace_csv(std::istream& is, int atoms);

/// Pointwise weighted sum of traces sharing a grid: sum_k w_k trace_k.
ObservableTrace combine_traces(const std::vector<const ObservableTrace*>& traces, const std::vector<double>& weights);

}  // namespace rydchain
