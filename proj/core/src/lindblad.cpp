#include "rydchain/lindblad.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numbers>
#include <thread>

#include "rydchain/error.hpp"
#include "rydchain/statevec.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

void validate(const NoiseModel& noise) {
  auto bad = [](double x) { return !(x >= 0.0) || !std::isfinite(x); };
  if (bad(noise.gamma) || bad(noise.gamma_c)) throw Error(ErrorKind::kInvalidNoise, "dephasing rates must be >= 0");
  if (bad(noise.d_omega_mhz) || bad(noise.d_delta_mhz)) throw Error(ErrorKind::kInvalidNoise, "Lorentzian widths must be >= 0");
  if (noise.shots < 1) throw Error(ErrorKind::kInvalidNoise, "shots must be >= 1");
  if (!(noise.tail_cut > 0.0)) throw Error(ErrorKind::kInvalidNoise, "tail cut must be positive");
  if (!(noise.omega0_mhz > 0.0)) throw Error(ErrorKind::kInvalidNoise, "Lorentzian centre of Omega must be positive");
}

Liouvillian::Liouvillian(const SpinSystem& sys, double gamma, double gamma_c)
    : n_(sys.N()), dim_(static_cast<Eigen::Index>(sys.dimension())), half_omega_(0.5 * sys.omega) {
  const Eigen::VectorXd E = diagonal_energies(sys);
  rate_.resize(dim_ * dim_);
  double max_rate = 0.0;
  for (Eigen::Index b = 0; b < dim_; ++b) {
    const int zb = 2 * std::popcount(static_cast<std::uint64_t>(b)) - n_;
    for (Eigen::Index a = 0; a < dim_; ++a) {
      const int za = 2 * std::popcount(static_cast<std::uint64_t>(a)) - n_;
      const double flips = std::popcount(static_cast<std::uint64_t>(a ^ b));
      const double dz = za - zb;
      const cplx r(-gamma * flips - 0.25 * gamma_c * dz * dz, -(E[a] - E[b]));
      rate_[a + b * dim_] = r;
      max_rate = std::max(max_rate, std::abs(r));
    }
  }
  norm_bound_ = max_rate + 2.0 * n_ * half_omega_;
}

void Liouvillian::apply(std::span<const cplx> in, std::span<cplx> out) const {
  // Real arithmetic throughout: std::complex products carry NaN-recovery
  // branches that block vectorization of these loops.
  const double h = half_omega_;
  for (Eigen::Index b = 0; b < dim_; ++b) {
    const cplx* col = in.data() + b * dim_;
    cplx* dst = out.data() + b * dim_;
    const cplx* rate = rate_.data() + b * dim_;
    for (Eigen::Index a = 0; a < dim_; ++a) {
      const double rr = rate[a].real(), ri = rate[a].imag(), xr = col[a].real(), xi = col[a].imag();
      dst[a] = cplx(rr * xr - ri * xi, rr * xi + ri * xr);
    }
    if (h == 0.0) continue;
    for (int i = 0; i < n_; ++i) {
      const Eigen::Index m = Eigen::Index{1} << i;
      const cplx* flipped_col = in.data() + (b ^ m) * dim_;
      // -i[H_I, rho]_ab = -i (Omega/2) (rho_{a^m,b} - rho_{a,b^m})
      for (Eigen::Index a = 0; a < dim_; ++a) {
        const double dr = col[a ^ m].real() - flipped_col[a].real();
        const double di = col[a ^ m].imag() - flipped_col[a].imag();
        dst[a] += cplx(h * di, -h * dr);
      }
    }
  }
}

namespace {

class DensityRecorder {
 public:
  DensityRecorder(int N, const BlockadeCensus* census, std::vector<double> times) : n_(N), census_(census) {
    trace_.atoms = N;
    trace_.times = std::move(times);
    const auto rows = static_cast<Eigen::Index>(trace_.times.size());
    trace_.P = Eigen::MatrixXd::Zero(rows, N + 1);
    if (census_) {
      trace_.Cm2 = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(census_->configs.size()));
      trace_.cm2_configs = census_->configs;
    }
  }

  void record(std::size_t k, const Eigen::VectorXcd& rho) {
    const auto row = static_cast<Eigen::Index>(k);
    const Eigen::Index dim = Eigen::Index{1} << n_;
    auto& diag = trace_.diagnostics;
    cplx tr = 0.0;
    for (Eigen::Index a = 0; a < dim; ++a) {
      const cplx p = rho[a + a * dim];
      tr += p;
      trace_.P(row, std::popcount(static_cast<std::uint64_t>(a))) += p.real();
      diag.min_population = std::min(diag.min_population, p.real());
    }
    double herm = 0.0;
    for (Eigen::Index b = 0; b < dim; ++b)
      for (Eigen::Index a = b; a < dim; ++a) herm = std::max(herm, std::abs(rho[a + b * dim] - std::conj(rho[b + a * dim])));
    diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, herm);
    diag.max_norm_deviation = std::max(diag.max_norm_deviation, std::abs(tr - 1.0));
    diag.max_probability_error = std::max(diag.max_probability_error, std::abs(trace_.P.row(row).sum() - 1.0));
    if (census_) {
      for (std::size_t m = 0; m < census_->configs.size(); ++m) {
        const auto c = static_cast<Eigen::Index>(census_->configs[m]);
        (*trace_.Cm2)(row, static_cast<Eigen::Index>(m)) = rho[c + c * dim].real();
      }
    }
  }

  ObservableTrace finish() {
    derive_moments(trace_);
    return std::move(trace_);
  }

 private:
  int n_;
  const BlockadeCensus* census_;
  ObservableTrace trace_;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Sum of traces [lo, hi) by recursive halving in index order.
ObservableTrace pairwise_sum(const std::vector<ObservableTrace>& traces, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return traces[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  const ObservableTrace left = pairwise_sum(traces, lo, mid);
  const ObservableTrace right = pairwise_sum(traces, mid, hi);
  return combine_traces({&left, &right}, {1.0, 1.0});
}

}  // namespace

ObservableTrace lindblad_evolve(const SpinSystem& sys, const NoiseModel& noise, const LindbladOptions& options) {
  validate(sys);
  validate(noise);
  const int N = sys.N();
  if (N > options.max_sites)
    throw Error(ErrorKind::kDimensionOverflow, "density-matrix evolution limited to N <= " + std::to_string(options.max_sites));
  const std::vector<double> times = output_grid(options.t_max, options.dt_out);
  const Liouvillian L(sys, noise.gamma, noise.gamma_c);
  const Eigen::Index dim = L.dimension();

  Eigen::VectorXcd rho0 = Eigen::VectorXcd::Zero(dim * dim);
  rho0[0] = 1.0;
  DensityRecorder recorder(N, options.census, times);
  const LinearOperator op = [&L](std::span<const cplx> in, std::span<cplx> out) { L.apply(in, out); };
  try {
    krylov_propagate(op, L.norm_bound(), rho0, times, options.krylov,
                     [&recorder](std::size_t k, const Eigen::VectorXcd& rho) { recorder.record(k, rho); });
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kConvergenceFailure) throw;
    throw Error(ErrorKind::kStepRejection, e.what());
  }
  return recorder.finish();
}

std::mt19937_64 shot_stream(std::uint64_t seed, std::uint64_t shot) {
  const std::uint64_t a = mix64(seed ^ mix64(shot));
  const std::uint64_t b = mix64(a ^ 0x5851f42d4c957f2dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double truncated_lorentzian(std::mt19937_64& rng, double x0, double hw, double tail_cut) {
  if (hw == 0.0) return x0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Inverse CDF restricted to the truncation window, so no redraws are needed.
  const double edge = std::atan(tail_cut);
  return x0 + hw * std::tan(edge * u(rng));
}

ShotSample sample_shot(const NoiseModel& noise, std::uint64_t shot, std::mt19937_64& rng) {
  ShotSample s{shot, 0.0, 0.0};
  for (int attempt = 0;; ++attempt) {
    s.omega_mhz = truncated_lorentzian(rng, noise.omega0_mhz, noise.d_omega_mhz, noise.tail_cut);
    if (s.omega_mhz > 0.0) break;
    if (attempt > 1000) throw Error(ErrorKind::kInvalidNoise, "Omega distribution has no positive support");
  }
  s.delta_mhz = truncated_lorentzian(rng, noise.delta0_mhz, noise.d_delta_mhz, noise.tail_cut);
  return s;
}

MonteCarloResult monte_carlo_quench(const SpinSystem& sys, const NoiseModel& noise, const MonteCarloOptions& options) {
  validate(noise);
  validate(sys);
  const auto shots = static_cast<std::size_t>(noise.shots);
  std::vector<ObservableTrace> traces(shots);
  std::vector<ShotSample> samples(shots);

  auto run_shot = [&](std::size_t k) {
    const std::uint64_t shot = options.shot_offset + k;
    std::mt19937_64 rng = shot_stream(noise.seed, shot);
    samples[k] = sample_shot(noise, shot, rng);
    SpinSystem local = sys;
    local.omega = units::mhz_to_angular(samples[k].omega_mhz);
    local.delta = units::mhz_to_angular(samples[k].delta_mhz);
    if (options.sample_interactions) local.V = options.sample_interactions(rng);
    if (options.backend == McBackend::kLindblad) {
      traces[k] = lindblad_evolve(local, noise, options.evolution);
    } else {
      QuenchOptions q;
      q.t_max = options.evolution.t_max;
      q.dt_out = options.evolution.dt_out;
      q.krylov = options.evolution.krylov;
      q.census = options.evolution.census;
      traces[k] = quench_evolve(local, q);
    }
  };

  const int workers = std::clamp(options.threads, 1, static_cast<int>(shots));
  if (workers == 1) {
    for (std::size_t k = 0; k < shots; ++k) run_shot(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(shots);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < shots; k = next++) {
          try {
            run_shot(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  MonteCarloResult out;
  out.trace = pairwise_sum(traces, 0, shots);
  const std::vector<const ObservableTrace*> one{&out.trace};
  out.trace = combine_traces(one, {1.0 / static_cast<double>(shots)});
  out.trace.diagnostics = traces.front().diagnostics;
  for (const auto& tr : traces) {
    auto& d = out.trace.diagnostics;
    d.max_norm_deviation = std::max(d.max_norm_deviation, tr.diagnostics.max_norm_deviation);
    d.max_energy_drift = std::max(d.max_energy_drift, tr.diagnostics.max_energy_drift);
    d.min_population = std::min(d.min_population, tr.diagnostics.min_population);
    d.max_hermiticity_error = std::max(d.max_hermiticity_error, tr.diagnostics.max_hermiticity_error);
    d.max_probability_error = std::max(d.max_probability_error, tr.diagnostics.max_probability_error);
  }
  out.samples = std::move(samples);
  return out;
}

}  // namespace rydchain
