#include "rydchain/analysis.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "rydchain/error.hpp"
#include "rydchain/statevec.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

double dominant_frequency(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1) {
  if (times.size() != values.size()) throw Error(ErrorKind::kLengthMismatch, "times/values mismatch");
  std::vector<double> window;
  double first = 0.0, last = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t0 - 1e-12 || times[k] > t1 + 1e-12) continue;
    if (window.empty()) first = times[k];
    last = times[k];
    window.push_back(values[k]);
  }
  if (static_cast<int>(window.size()) < kMinSpectralSamples)
    throw Error(ErrorKind::kWindowTooShort, std::to_string(window.size()) + " samples in window, need " +
                                                std::to_string(kMinSpectralSamples));
  const double dt = (last - first) / static_cast<double>(window.size() - 1);
  const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
  std::size_t padded = 1;
  while (padded < 16 * window.size()) padded <<= 1;
  std::vector<double> x(padded, 0.0);
  for (std::size_t k = 0; k < window.size(); ++k) x[k] = window[k] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, x);
  std::vector<double> power(padded / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]);

  std::size_t peak = 0;
  for (std::size_t k = 1; k + 1 < power.size(); ++k)
    if (power[k] >= power[k - 1] && power[k] > power[k + 1] && (peak == 0 || power[k] > power[peak])) peak = k;
  if (peak == 0) throw Error(ErrorKind::kWindowTooShort, "no non-DC spectral peak in window");
  const double a = power[peak - 1], b = power[peak], c = power[peak + 1];
  const double denom = a - 2.0 * b + c;
  const double shift = denom == 0.0 ? 0.0 : 0.5 * (a - c) / denom;
  return (static_cast<double>(peak) + shift) / (static_cast<double>(padded) * dt);
}

double dominant_frequency(const ObservableTrace& trace, double t0, double t1) {
  return dominant_frequency(trace.times, trace.f_R, t0, t1);
}

double scaling_alpha(double omega, double c6_ghz_um6, double n_eff) {
  return units::angular_to_mhz(omega) / (units::c6_ghz_to_mhz(std::abs(c6_ghz_um6)) * std::pow(n_eff, 6));
}

ScalingFit scaling_fit(const std::vector<ScalingPoint>& points) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.alpha > 0.0) || !(p.f_R_bar > 0.0)) throw Error(ErrorKind::kNonpositiveValue, "alpha and f_R_bar must be > 0");
    distinct.insert(p.alpha);
  }
  if (distinct.size() < 3) throw Error(ErrorKind::kInsufficientPoints, "need at least 3 distinct alpha values");
  const auto n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& p : points) {
    sx += std::log(p.alpha);
    sy += std::log(p.f_R_bar);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& p : points) {
    const double dx = std::log(p.alpha) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.f_R_bar) - my);
  }
  ScalingFit fit;
  fit.points = static_cast<int>(points.size());
  fit.nu = sxy / sxx;
  fit.intercept = my - fit.nu * mx;
  double sse = 0;
  for (const auto& p : points) {
    const double r = std::log(p.f_R_bar) - fit.intercept - fit.nu * std::log(p.alpha);
    sse += r * r;
  }
  fit.stderr_nu = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci_low = fit.nu - q * fit.stderr_nu;
  fit.ci_high = fit.nu + q * fit.stderr_nu;
  return fit;
}

nlohmann::json to_json(const ScalingFit& fit) {
  return {{"nu", fit.nu},           {"intercept", fit.intercept}, {"stderr", fit.stderr_nu},
          {"ci95", {fit.ci_low, fit.ci_high}}, {"points", fit.points}};
}

namespace {

// Weighted quantile of sorted (value, weight) pairs.
double weighted_quantile(const std::vector<std::pair<double, double>>& sorted, double q) {
  double acc = 0.0;
  for (const auto& [v, w] : sorted) {
    acc += w;
    if (acc >= q) return v;
  }
  return sorted.back().first;
}

}  // namespace

EthDiagnostics eth_diagnostics(const SpinSystem& sys, int site, int dense_cap) {
  const int N = sys.N();
  if (site < 0) site = (N - 1) / 2;
  if (site >= N) throw Error(ErrorKind::kInvalidParameter, "ETH site out of range");
  const Spectrum spec = full_spectrum(sys, dense_cap);
  const Eigen::Index dim = spec.energies.size();

  EthDiagnostics out;
  out.site = site;
  out.E_alpha = spec.energies;
  out.n_diag.resize(dim);
  out.weight.resize(dim);
  const std::uint64_t mask = site_mask(N, site);
  for (Eigen::Index a = 0; a < dim; ++a) {
    double n = 0.0;
    for (Eigen::Index s = 0; s < dim; ++s)
      if (static_cast<std::uint64_t>(s) & mask) n += spec.vectors(s, a) * spec.vectors(s, a);
    out.n_diag[a] = n;
    out.weight[a] = spec.vectors(0, a) * spec.vectors(0, a);
  }

  // Exact moments: <H> is the diagonal entry of |0>, <H^2> = ||H|0>||^2.
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(dim);
  psi0[0] = 1.0;
  const Eigen::VectorXcd h0 = rydchain::apply(sys, psi0);
  out.mean_E = diagonal_energies(sys)[0];
  out.sigma_E = std::sqrt(std::max(0.0, h0.squaredNorm() - out.mean_E * out.mean_E));

  // Weighted Freedman-Diaconis binning over mean +- 8 sigma of the weights;
  // mass outside the range is folded into the edge bins.
  std::vector<std::pair<double, double>> sorted;
  for (Eigen::Index a = 0; a < dim; ++a) sorted.emplace_back(out.E_alpha[a], out.weight[a]);
  std::sort(sorted.begin(), sorted.end());
  const double total = out.weight.sum();
  for (auto& p : sorted) p.second /= total;
  const double mu = out.E_alpha.dot(out.weight) / total;
  const double var = (out.E_alpha.array() - mu).square().matrix().dot(out.weight) / total;
  const double sd = std::sqrt(std::max(var, 0.0));
  const double lo = std::max(out.E_alpha.minCoeff(), mu - 8.0 * sd);
  const double hi = std::min(out.E_alpha.maxCoeff(), mu + 8.0 * sd);
  const double iqr = weighted_quantile(sorted, 0.75) - weighted_quantile(sorted, 0.25);
  const double effective = 1.0 / out.weight.array().square().sum();
  const double fd = 2.0 * iqr * std::cbrt(1.0 / effective);
  int bins = kMinHistogramBins;
  if (fd > 0.0 && hi > lo) bins = std::max(bins, static_cast<int>(std::ceil((hi - lo) / fd)));
  bins = std::min(bins, 100000);
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  out.bin_width = width;
  out.bin_centers.resize(bins);
  out.rho_mass = Eigen::VectorXd::Zero(bins);
  for (int b = 0; b < bins; ++b) out.bin_centers[b] = lo + (b + 0.5) * width;
  for (const auto& [e, w] : sorted) {
    const int b = std::clamp(static_cast<int>(std::floor((e - lo) / width)), 0, bins - 1);
    out.rho_mass[b] += w;
  }
  out.hist_mean = out.bin_centers.dot(out.rho_mass);
  out.hist_sigma = std::sqrt((out.bin_centers.array() - out.hist_mean).square().matrix().dot(out.rho_mass));
  return out;
}

double diagonal_scatter(const EthDiagnostics& eth, double center, double half_width) {
  std::vector<double> v;
  for (Eigen::Index a = 0; a < eth.E_alpha.size(); ++a)
    if (std::abs(eth.E_alpha[a] - center) <= half_width) v.push_back(eth.n_diag[a]);
  if (v.size() < 2) throw Error(ErrorKind::kEmptyWindow, "fewer than two eigenstates in the energy window");
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void write_eth_csv(std::ostream& eigen_os, std::ostream& hist_os, const EthDiagnostics& eth) {
  eigen_os << std::setprecision(17) << "E_alpha,n_diag,weight\n";
  for (Eigen::Index a = 0; a < eth.E_alpha.size(); ++a)
    eigen_os << eth.E_alpha[a] << ',' << eth.n_diag[a] << ',' << eth.weight[a] << '\n';
  hist_os << std::setprecision(17) << "bin_center,rho\n";
  for (Eigen::Index b = 0; b < eth.bin_centers.size(); ++b)
    hist_os << eth.bin_centers[b] << ',' << eth.rho_mass[b] << '\n';
}

std::vector<double> running_average(const std::vector<double>& times, const std::vector<double>& values, double window) {
  if (times.size() != values.size()) throw Error(ErrorKind::kLengthMismatch, "times/values mismatch");
  std::vector<double> out(values.size());
  std::size_t lo = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    acc += values[k];
    while (times[lo] <= times[k] - window + 1e-12) acc -= values[lo++];
    out[k] = acc / static_cast<double>(k - lo + 1);
  }
  return out;
}

int count_prominent_maxima(const std::vector<double>& values, double prominence, std::size_t end) {
  end = std::min(end, values.size());
  int count = 0;
  for (std::size_t k = 1; k + 1 < end; ++k) {
    if (!(values[k] > values[k - 1] && values[k] >= values[k + 1])) continue;
    double left = values[k], right = values[k];
    for (std::size_t j = k; j-- > 0 && values[j] <= values[k];) left = std::min(left, values[j]);
    for (std::size_t j = k + 1; j < values.size() && values[j] <= values[k]; ++j) right = std::min(right, values[j]);
    if (values[k] - std::max(left, right) > prominence) ++count;
  }
  return count;
}

namespace {

struct RabiResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  const std::vector<double>* t;
  const std::vector<double>* f;
  int N;
  int inputs() const { return 2; }
  int values() const { return static_cast<int>(t->size()); }
  // x = (omega in rad/us, decay rate 1/tau in 1/us)
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    for (std::size_t k = 0; k < t->size(); ++k) {
      const double tk = (*t)[k];
      r[static_cast<Eigen::Index>(k)] = (1.0 - std::cos(x[0] * tk) * std::exp(-x[1] * tk)) / (2.0 * N) - (*f)[k];
    }
    return 0;
  }
};

}  // namespace

RabiDecayFit fit_rabi_decay(const std::vector<double>& times, const std::vector<double>& f, int N) {
  if (times.size() != f.size()) throw Error(ErrorKind::kLengthMismatch, "times/values mismatch");
  if (times.size() < static_cast<std::size_t>(kMinSpectralSamples)) throw Error(ErrorKind::kInsufficientData, "too few samples");
  const double f0 = dominant_frequency(times, f, times.front(), times.back());
  RabiResidual res{&times, &f, N};
  RabiDecayFit best;
  best.rms = std::numeric_limits<double>::infinity();
  for (double tau0 : {0.5, 2.0, 8.0, 30.0}) {
    Eigen::VectorXd x(2);
    x << units::mhz_to_angular(f0), 1.0 / tau0;
    Eigen::NumericalDiff<RabiResidual> diff(res);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<RabiResidual>> lm(diff);
    lm.minimize(x);
    Eigen::VectorXd r(res.values());
    res(x, r);
    const double rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
    if (rms < best.rms) best = {units::angular_to_mhz(std::abs(x[0])), 1.0 / x[1], rms};
  }
  if (!std::isfinite(best.rms) || !(best.tau_us > 0.0)) throw Error(ErrorKind::kFitFailure, "Rabi decay fit failed");
  return best;
}

double oscillation_amplitude(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t0 - 1e-12 || times[k] > t1 + 1e-12) continue;
    lo = std::min(lo, values[k]);
    hi = std::max(hi, values[k]);
  }
  if (!(hi >= lo)) throw Error(ErrorKind::kEmptyWindow, "no samples in amplitude window");
  return 0.5 * (hi - lo);
}

}  // namespace rydchain
