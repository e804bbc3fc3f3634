#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "rydchain/analysis.hpp"
#include "rydchain/error.hpp"
#include "rydchain/units.hpp"

namespace rydchain {
using namespace units;
namespace {

constexpr double kPi = std::numbers::pi;

SpinSystem chain_system(int N, double theta, double omega_mhz = 1.0) {
  return {rescale_to_v12(interaction_matrix(build_chain(N, 4.0, theta), 470.0), 20.0), mhz_to_angular(omega_mhz), 0.0};
}

std::vector<double> sample_times(double t0, double t1, double dt) {
  std::vector<double> t;
  for (int k = 0; t0 + k * dt <= t1 + 1e-12; ++k) t.push_back(t0 + k * dt);
  return t;
}

template <class F>
std::vector<double> map(const std::vector<double>& t, F f) {
  std::vector<double> v;
  for (double x : t) v.push_back(f(x));
  return v;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kIo;
}

TEST(DominantFrequency, SyntheticSine) {
  const auto t = sample_times(0.0, 6.0, 0.02);
  const auto v = map(t, [](double x) { return std::sin(2 * kPi * 1.414 * x); });
  EXPECT_NEAR(dominant_frequency(t, v, 0.0, 6.0), 1.414, 0.01 * 1.414);
  const auto w = map(t, [](double x) { return 0.3 + 0.1 * std::cos(2 * kPi * 1.732 * x) * std::exp(-x / 3); });
  EXPECT_NEAR(dominant_frequency(t, w, 0.5, 6.0), 1.732, 0.01 * 1.732);
}

TEST(DominantFrequency, InvariantUnderOffsetAndShift) {
  const auto t = sample_times(0.0, 5.0, 0.02);
  const auto v = map(t, [](double x) { return std::sin(2 * kPi * 1.3 * x) + 0.4 * std::sin(2 * kPi * 0.37 * x); });
  const double f0 = dominant_frequency(t, v, 0.0, 5.0);
  auto offset = v;
  for (double& x : offset) x += 7.5;
  EXPECT_NEAR(dominant_frequency(t, offset, 0.0, 5.0), f0, 1e-12);
  auto shifted = t;
  for (double& x : shifted) x += 2.25;
  EXPECT_NEAR(dominant_frequency(shifted, v, 2.25, 7.25), f0, 1e-12);
}

TEST(DominantFrequency, ShortWindow) {
  const auto t = sample_times(0.0, 1.0, 0.1);
  const auto v = map(t, [](double x) { return std::sin(x); });
  EXPECT_EQ(kind_of([&] { dominant_frequency(t, v, 0.0, 1.0); }), ErrorKind::kWindowTooShort);
}

TEST(ScalingFit, ExactPowerLaw) {
  std::vector<ScalingPoint> pts;
  for (double a : {0.01, 0.03, 0.1, 0.4, 2.0}) pts.push_back({a, std::pow(a, 0.2), 0.0, 15});
  const ScalingFit fit = scaling_fit(pts);
  EXPECT_NEAR(fit.nu, 0.2, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_NEAR(fit.stderr_nu, 0.0, 1e-10);
  auto doubled = pts;
  doubled.insert(doubled.end(), pts.begin(), pts.end());
  EXPECT_NEAR(scaling_fit(doubled).nu, fit.nu, 1e-12);
}

TEST(ScalingFit, ConfidenceIntervalMatchesTextbookFormula) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{1.1, 1.9, 3.2, 3.9, 5.05};
  std::vector<ScalingPoint> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({std::exp(x[i]), std::exp(y[i]), 0.0, 10});
  const ScalingFit fit = scaling_fit(pts);
  // slope = Sxy / Sxx with Sxx = 10; residual variance over 3 degrees of freedom.
  double sxy = 0;
  for (int i = 0; i < 5; ++i) sxy += (x[i] - 3) * (y[i] - 3.03);
  const double slope = sxy / 10.0;
  const double icpt = 3.03 - slope * 3;
  double sse = 0;
  for (int i = 0; i < 5; ++i) sse += std::pow(y[i] - icpt - slope * x[i], 2);
  const double se = std::sqrt(sse / 3 / 10.0);
  const double t975_3 = 3.182446305284263;
  EXPECT_NEAR(fit.nu, slope, 1e-12);
  EXPECT_NEAR(fit.stderr_nu, se, 1e-12);
  EXPECT_NEAR(fit.ci_low, slope - t975_3 * se, 1e-10);
  EXPECT_NEAR(fit.ci_high, slope + t975_3 * se, 1e-10);
  const nlohmann::json j = to_json(fit);
  EXPECT_EQ(j.at("ci95").size(), 2u);
}

TEST(ScalingFit, Errors) {
  EXPECT_EQ(kind_of([] { scaling_fit({{0.1, 0.2, 0, 1}, {0.1, 0.2, 0, 1}, {0.3, 0.3, 0, 1}}); }),
            ErrorKind::kInsufficientPoints);
  EXPECT_EQ(kind_of([] { scaling_fit({{0.1, 0.2, 0, 1}, {-0.2, 0.2, 0, 1}, {0.3, 0.3, 0, 1}}); }),
            ErrorKind::kNonpositiveValue);
}

TEST(ScalingAlpha, Formula) {
  // Omega / 2pi = 1 MHz, C6 = 470 GHz um^6 = 4.7e5 MHz um^6, n_eff = 0.25 / um.
  EXPECT_NEAR(scaling_alpha(mhz_to_angular(1.0), 470.0, 0.25), 1.0 / (4.7e5 * std::pow(0.25, 6)), 1e-15);
}

TEST(Eth, AnalyticMomentsAndHistogram) {
  for (int N : {6, 9}) {
    const SpinSystem sys = chain_system(N, 180.0);
    const EthDiagnostics eth = eth_diagnostics(sys);
    EXPECT_EQ(eth.site, (N - 1) / 2);
    EXPECT_NEAR(eth.mean_E, 0.0, 1e-10);
    EXPECT_NEAR(eth.sigma_E, sys.omega * std::sqrt(N) / 2, 1e-8);
    EXPECT_NEAR(eth.rho_mass.sum(), 1.0, 1e-9);
    EXPECT_NEAR(eth.weight.sum(), 1.0, 1e-10);
    EXPECT_NEAR(eth.weight.dot(eth.E_alpha), 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(eth.weight.dot(eth.E_alpha.cwiseAbs2())), eth.sigma_E, 1e-8);
    EXPECT_GE(eth.n_diag.minCoeff(), -1e-12);
    EXPECT_LE(eth.n_diag.maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(eth.bin_centers.size(), kMinHistogramBins);
    EXPECT_LT(std::abs(eth.hist_mean), 0.1 * eth.sigma_E);
    EXPECT_NEAR(eth.hist_sigma, eth.sigma_E, 0.1 * eth.sigma_E);
  }
}

TEST(Eth, DiagonalMatrixElementsMatchDirectDiagonalization) {
  const SpinSystem sys = chain_system(5, 60.0);
  const EthDiagnostics eth = eth_diagnostics(sys, 1);
  // Independent Hamiltonian from Pauli algebra.
  const int N = 5, dim = 32;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    auto n = [&](int i) { return (s >> (N - 1 - i)) & 1; };
    for (int i = 0; i < N; ++i) {
      H(s ^ (1 << (N - 1 - i)), s) += sys.omega / 2;
      for (int j = i + 1; j < N; ++j) H(s, s) += sys.V.V(i, j) * n(i) * n(j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  EXPECT_LT((es.eigenvalues() - eth.E_alpha).cwiseAbs().maxCoeff(), 1e-10);
  for (int a = 0; a < dim; ++a) {
    double nd = 0;
    for (int s = 0; s < dim; ++s)
      if ((s >> (N - 2)) & 1) nd += es.eigenvectors()(s, a) * es.eigenvectors()(s, a);
    // Near-degenerate pairs mix freely; compare isolated levels only.
    if (a == 0 || std::abs(es.eigenvalues()[a] - es.eigenvalues()[a - 1]) > 1e-2)
      if (a + 1 == dim || std::abs(es.eigenvalues()[a + 1] - es.eigenvalues()[a]) > 1e-2) {
        EXPECT_NEAR(eth.n_diag[a], nd, 1e-10);
        EXPECT_NEAR(eth.weight[a], std::pow(es.eigenvectors()(0, a), 2), 1e-10);
      }
  }
}

TEST(Eth, LinearChainDiagonalIsNotSmooth) {
  const SpinSystem sys = chain_system(10, 180.0);
  const EthDiagnostics eth = eth_diagnostics(sys);
  // Window [-Omega sqrt(N), Omega sqrt(N)] around the initial-state energy.
  EXPECT_GT(diagonal_scatter(eth, eth.mean_E, sys.omega * std::sqrt(10.0)), 0.05);
}

TEST(Eth, SizeCapAndCsv) {
  EXPECT_EQ(kind_of([] { eth_diagnostics(chain_system(6, 180.0), -1, 5); }), ErrorKind::kDimensionOverflow);
  const EthDiagnostics eth = eth_diagnostics(chain_system(4, 180.0));
  std::ostringstream eig, hist;
  write_eth_csv(eig, hist, eth);
  const std::string eig_text = eig.str();
  EXPECT_EQ(std::count(eig_text.begin(), eig_text.end(), '\n'), 17);
  EXPECT_EQ(hist.str().rfind("bin_center,rho\n", 0), 0u);
}

TEST(RunningAverage, LinearRampLagsByHalfWindow) {
  const auto t = sample_times(0.0, 4.0, 0.01);
  const auto avg = running_average(t, t, 1.0);
  EXPECT_DOUBLE_EQ(avg[0], 0.0);
  // Window (t - 1, t] holds 100 samples with mean t - 0.495.
  for (std::size_t k = 100; k < t.size(); ++k) EXPECT_NEAR(avg[k], t[k] - 0.495, 1e-9);
  EXPECT_NEAR(avg[50], 0.25, 1e-9);
}

TEST(ProminentMaxima, CountsOnlyLargeBumps) {
  const auto t = sample_times(0.0, 4.0, 0.01);
  const auto v = map(t, [](double x) { return 0.2 * std::sin(2 * kPi * x) + 1e-4 * std::sin(2 * kPi * 13 * x); });
  EXPECT_EQ(count_prominent_maxima(v, 1e-3, v.size()), 4);
  EXPECT_EQ(count_prominent_maxima(v, 1e-3, 150), 2);
  const auto mono = map(t, [](double x) { return 1 - std::exp(-x); });
  EXPECT_EQ(count_prominent_maxima(mono, 1e-3, mono.size()), 0);
}

TEST(RabiDecay, RecoversFrequencyAndEnvelope) {
  const auto t = sample_times(0.0, 10.0, 0.01);
  const auto f = map(t, [](double x) { return (1 - std::cos(2 * kPi * 1.41 * x) * std::exp(-x / 2.3)) / 4; });
  const RabiDecayFit fit = fit_rabi_decay(t, f, 2);
  EXPECT_NEAR(fit.omega_mhz, 1.41, 1e-6);
  EXPECT_NEAR(fit.tau_us, 2.3, 1e-5);
  EXPECT_LT(fit.rms, 1e-8);
}

TEST(OscillationAmplitude, HalfPeakToPeak) {
  const auto t = sample_times(0.0, 3.0, 0.001);
  const auto v = map(t, [](double x) { return 0.3 + 0.05 * std::cos(2 * kPi * x); });
  EXPECT_NEAR(oscillation_amplitude(t, v, 0.0, 3.0), 0.05, 1e-9);
}

}  // namespace
}  // namespace rydchain
