#include "rydchain/statevec.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>

#include "rydchain/error.hpp"

namespace rydchain {

namespace {

// Collects observables from successive pure states into a trace.
class PureStateRecorder {
 public:
  PureStateRecorder(const MatrixFreeHamiltonian& h, const BlockadeCensus* census, std::vector<double> times)
      : h_(h), census_(census), scratch_(h.dimension()) {
    trace_.atoms = h.sites();
    trace_.times = std::move(times);
    const auto rows = static_cast<Eigen::Index>(trace_.times.size());
    trace_.P = Eigen::MatrixXd::Zero(rows, h.sites() + 1);
    if (census_) {
      trace_.Cm2 = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(census_->configs.size()));
      trace_.cm2_configs = census_->configs;
    }
  }

  void record(std::size_t k, const Eigen::VectorXcd& psi) {
    const auto row = static_cast<Eigen::Index>(k);
    const ExcitationDistribution dist = excitation_distribution(psi, h_.sites(), census_);
    trace_.P.row(row) = dist.P.transpose();
    if (census_) trace_.Cm2->row(row) = dist.Cm2.transpose();

    auto& diag = trace_.diagnostics;
    const double norm = psi.norm();
    diag.max_norm_deviation = std::max(diag.max_norm_deviation, std::abs(norm - 1.0));
    diag.max_probability_error = std::max(diag.max_probability_error, std::abs(dist.P.sum() - 1.0));
    h_.apply({psi.data(), static_cast<std::size_t>(psi.size())},
             {scratch_.data(), static_cast<std::size_t>(scratch_.size())});
    const double energy = psi.dot(scratch_).real();
    if (k == 0) energy0_ = energy;
    diag.max_energy_drift = std::max(diag.max_energy_drift, std::abs(energy - energy0_));
  }

  ObservableTrace finish() {
    derive_moments(trace_);
    return std::move(trace_);
  }

 private:
  const MatrixFreeHamiltonian& h_;
  const BlockadeCensus* census_;
  Eigen::VectorXcd scratch_;
  ObservableTrace trace_;
  double energy0_ = 0.0;
};

}  // namespace

ExcitationDistribution excitation_distribution(const Eigen::VectorXcd& state, int N, const BlockadeCensus* census) {
  if (state.size() != (Eigen::Index{1} << N)) throw Error(ErrorKind::kLengthMismatch, "state length does not match 2^N");
  ExcitationDistribution out;
  out.P = Eigen::VectorXd::Zero(N + 1);
  for (Eigen::Index s = 0; s < state.size(); ++s)
    out.P[std::popcount(static_cast<std::uint64_t>(s))] += std::norm(state[s]);
  if (census) {
    if (census->N != N) throw Error(ErrorKind::kLengthMismatch, "census built for a different chain length");
    out.Cm2.resize(static_cast<Eigen::Index>(census->configs.size()));
    for (std::size_t m = 0; m < census->configs.size(); ++m)
      out.Cm2[static_cast<Eigen::Index>(m)] = std::norm(state[static_cast<Eigen::Index>(census->configs[m])]);
  }
  return out;
}

ObservableTrace quench_evolve(const SpinSystem& sys, const QuenchOptions& options) {
  validate(sys);
  const int N = sys.N();
  if (options.method == PropagationMethod::kDenseEigen && N > options.dense_cap)
    throw Error(ErrorKind::kDimensionOverflow, "dense-eigen propagation limited to N <= " + std::to_string(options.dense_cap));
  const std::vector<double> times = output_grid(options.t_max, options.dt_out);
  MatrixFreeHamiltonian h(sys);

  Eigen::VectorXcd psi0;
  if (options.initial_state) {
    psi0 = *options.initial_state;
    if (psi0.size() != h.dimension()) throw Error(ErrorKind::kLengthMismatch, "initial state length does not match 2^N");
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw Error(ErrorKind::kInvalidParameter, "initial state not normalized");
  } else {
    psi0 = Eigen::VectorXcd::Zero(h.dimension());
    psi0[0] = 1.0;
  }

  PureStateRecorder recorder(h, options.census, times);
  if (options.method == PropagationMethod::kDenseEigen) {
    const Spectrum spec = full_spectrum(sys, options.dense_cap);
    const Eigen::VectorXcd coeffs = spec.vectors.transpose().cast<cplx>() * psi0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Eigen::VectorXcd phased =
          coeffs.cwiseProduct((spec.energies * (-times[k])).unaryExpr([](double x) { return std::polar(1.0, x); }));
      recorder.record(k, spec.vectors.cast<cplx>() * phased);
    }
  } else {
    const LinearOperator generator = [&h](std::span<const cplx> in, std::span<cplx> out) {
      h.apply(in, out);
      for (auto& v : out) v *= cplx(0.0, -1.0);
    };
    krylov_propagate(generator, h.norm_bound(), psi0, times, options.krylov,
                     [&recorder](std::size_t k, const Eigen::VectorXcd& psi) { recorder.record(k, psi); });
  }
  return recorder.finish();
}

SteadyState steady_average(const ObservableTrace& trace, double t_relax, double t_end) {
  if (trace.size() == 0) throw Error(ErrorKind::kEmptyWindow, "empty trace");
  if (t_relax >= trace.times.back()) throw Error(ErrorKind::kEmptyWindow, "t_relax beyond the end of the trace");
  SteadyState out;
  out.t_relax = t_relax;
  out.t_end = std::min(t_end, trace.times.back());
  out.P_eq = Eigen::VectorXd::Zero(trace.P.cols());
  if (trace.Cm2) out.Cm2_eq = Eigen::VectorXd::Zero(trace.Cm2->cols());
  const double slack = 1e-9;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (trace.times[t] < t_relax - slack || trace.times[t] > t_end + slack) continue;
    const auto row = static_cast<Eigen::Index>(t);
    ++out.samples;
    out.f_R_bar += trace.f_R[t];
    out.M2_bar += trace.M2[t];
    out.P_eq += trace.P.row(row).transpose();
    if (trace.Cm2) *out.Cm2_eq += trace.Cm2->row(row).transpose();
  }
  if (out.samples == 0) throw Error(ErrorKind::kEmptyWindow, "no samples in averaging window");
  out.f_R_bar /= out.samples;
  out.M2_bar /= out.samples;
  out.P_eq /= out.samples;
  if (out.Cm2_eq) *out.Cm2_eq /= out.samples;
  return out;
}

double default_t_relax(double theta_deg) {
  const double x = std::clamp((theta_deg - 60.0) / 120.0, 0.0, 1.0);
  return 1.5 + 0.5 * x;
}

Spectrum full_spectrum(const SpinSystem& sys, int dense_cap) {
  const Eigen::MatrixXd H = dense_hamiltonian(sys, dense_cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::kConvergenceFailure, "dense eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace rydchain
