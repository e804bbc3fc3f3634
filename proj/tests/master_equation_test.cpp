#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

#include "rydchain/error.hpp"
#include "rydchain/master_equation.hpp"
#include "rydchain/units.hpp"

namespace rydchain {
using namespace units;
namespace {

// Linear chain, N = 10, nearest-neighbour blockade.
const std::vector<std::uint64_t> kNu10{1, 10, 36, 56, 35, 6};
constexpr double kD10 = 144.0;

Eigen::VectorXd census_distribution() {
  Eigen::VectorXd P(6);
  for (int n = 0; n < 6; ++n) P[n] = static_cast<double>(kNu10[n]) / kD10;
  return P;
}

BalanceRatios theoretical_ratios() { return balance_ratios(census_distribution()); }

// Independent integration of dP/dt with Gamma(t) = 2 Omega^2 t T, directly in t.
Eigen::MatrixXd odeint_oracle(const std::vector<double>& T_up, const std::vector<double>& T_down, double omega,
                              const Eigen::VectorXd& P0, const std::vector<double>& times) {
  using State = std::vector<double>;
  const std::size_t K = T_up.size() + 1;
  auto rhs = [&](const State& p, State& dp, double t) {
    const double g = 2.0 * omega * omega * t;
    for (std::size_t n = 0; n < K; ++n) {
      double v = 0.0;
      if (n + 1 < K) v += g * (T_down[n] * p[n + 1] - T_up[n] * p[n]);
      if (n > 0) v += g * (T_up[n - 1] * p[n - 1] - T_down[n - 1] * p[n]);
      dp[n] = v;
    }
  };
  State p(P0.data(), P0.data() + P0.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(K));
  std::size_t k = 0;
  namespace ode = boost::numeric::odeint;
  ode::integrate_times(ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, p, times.begin(),
                       times.end(), 1e-4, [&](const State& x, double) {
                         for (std::size_t n = 0; n < K; ++n) out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) = x[n];
                         ++k;
                       });
  return out;
}

std::vector<double> grid(double t_max, double dt) { return output_grid(t_max, dt); }

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

TEST(BalanceRatios, CensusDistributionGivesNuRatios) {
  const BalanceRatios r = theoretical_ratios();
  const std::vector<double> expected{1.0 / 10, 10.0 / 36, 36.0 / 56, 56.0 / 35, 35.0 / 6};
  ASSERT_EQ(r.n_max(), 5);
  for (int n = 0; n < 5; ++n) {
    EXPECT_NEAR(r.ratios[n], expected[n], 1e-14);
    EXPECT_EQ(r.provenance[n], RatioProvenance::kMeasured);
  }
  EXPECT_TRUE(r.complete());
}

TEST(BalanceRatios, UniformGivesOnes) {
  const BalanceRatios r = balance_ratios(Eigen::VectorXd::Constant(4, 0.25));
  for (double x : r.ratios) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(BalanceRatios, DegenerateAndUndefinedEntries) {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(4);
  delta[0] = 1.0;
  try {
    balance_ratios(delta);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateDistribution);
  }
  Eigen::VectorXd tail = census_distribution();
  tail[5] = 0.0;
  tail /= tail.sum();
  const BalanceRatios m = balance_ratios(tail);
  EXPECT_TRUE(std::isnan(m.ratios[4]));
  EXPECT_FALSE(m.complete());
  const BalanceRatios f = with_theoretical_fallback(m, kNu10);
  EXPECT_TRUE(f.complete());
  EXPECT_NEAR(f.ratios[4], 35.0 / 6, 1e-14);
  EXPECT_EQ(f.provenance[4], RatioProvenance::kTheoretical);
  EXPECT_EQ(f.provenance[0], RatioProvenance::kMeasured);
}

TEST(MasterModel, DownRatesFollowDetailedBalance) {
  const BalanceRatios r = theoretical_ratios();
  const MasterEquationModel m = make_model(10, mhz_to_angular(1.0), {0.5, 0.4, 0.3, 0.2, 0.1}, r);
  ASSERT_EQ(m.T_down.size(), 5u);
  for (int n = 0; n < 5; ++n) EXPECT_DOUBLE_EQ(m.T_down[n], m.T_up[n] * r.ratios[n]);
  EXPECT_EQ(m.T_up.size() + m.T_down.size(), 2u * m.n_max);
}

TEST(MasterModel, StationaryDistributionReproducesInput) {
  Eigen::VectorXd P_eq(5);
  P_eq << 0.1, 0.3, 0.25, 0.2, 0.15;
  const MasterEquationModel m = make_model(8, 3.0, {0.2, 0.05, 1.0, 0.3}, balance_ratios(P_eq));
  EXPECT_LT(total_variation(stationary_distribution(m), P_eq), 1e-6);
  EXPECT_LT((generator(m) * P_eq).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IntegrateMaster, FixedPointStaysConstant) {
  const MasterEquationModel m = make_model(10, mhz_to_angular(1.0), {0.5, 0.4, 0.3, 0.2, 0.1}, theoretical_ratios());
  const Eigen::VectorXd P0 = stationary_distribution(m);
  const ObservableTrace tr = integrate_master(m, P0, grid(5.0, 0.1));
  for (std::size_t k = 0; k < tr.size(); ++k)
    EXPECT_LT((tr.P.row(static_cast<Eigen::Index>(k)).transpose() - P0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(IntegrateMaster, RelaxesToCensusDistribution) {
  const MasterEquationModel m = make_model(10, mhz_to_angular(1.0), {0.05, 0.04, 0.03, 0.02, 0.01}, theoretical_ratios());
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(6);
  P0[0] = 1.0;
  const ObservableTrace tr = integrate_master(m, P0, {0.0, 20.0});
  EXPECT_LT(total_variation(tr.P.row(1).transpose(), census_distribution()), 1e-3);
  EXPECT_NEAR(tr.f_R[1], 0.2916666666666667, 1e-3);
}

TEST(IntegrateMaster, ConservesProbabilityAndMatchesOdeint) {
  const std::vector<double> T_up{0.08, 0.05, 0.02, 0.01, 0.004};
  const MasterEquationModel m = make_model(10, mhz_to_angular(1.0), T_up, theoretical_ratios());
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(6);
  P0[0] = 1.0;
  const std::vector<double> times = grid(4.0, 0.05);
  const ObservableTrace tr = integrate_master(m, P0, times);
  const Eigen::MatrixXd ref = odeint_oracle(m.T_up, m.T_down, m.omega, P0, times);
  EXPECT_LT((tr.P - ref).cwiseAbs().maxCoeff(), 1e-9);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto row = tr.P.row(static_cast<Eigen::Index>(k));
    EXPECT_NEAR(row.sum(), 1.0, 1e-9);
    EXPECT_GE(row.minCoeff(), -1e-12);
    double f = 0.0, m2 = 0.0;
    for (int n = 0; n < 6; ++n) {
      f += n * row[n] / 10.0;
      m2 += n * n * row[n] / 100.0;
    }
    EXPECT_NEAR(tr.f_R[k], f, 1e-14);
    EXPECT_NEAR(tr.M2[k], m2, 1e-14);
  }
}

TEST(IntegrateMaster, RelaxationIsMonotone) {
  const MasterEquationModel m = make_model(10, mhz_to_angular(1.0), {0.2, 0.1, 0.05, 0.02, 0.01}, theoretical_ratios());
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(6);
  P0[0] = 1.0;
  const ObservableTrace tr = integrate_master(m, P0, grid(6.0, 0.01));
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) EXPECT_FALSE(tr.f_R[k] > tr.f_R[k - 1] + 1e-12 && tr.f_R[k] > tr.f_R[k + 1] + 1e-12);
}

TEST(IntegrateMaster, CommonRateScaleOnlyChangesTimescale) {
  const std::vector<double> T{0.2, 0.1, 0.05, 0.02, 0.01};
  std::vector<double> T4 = T;
  for (double& x : T4) x *= 4.0;
  const double omega = mhz_to_angular(1.0);
  const MasterEquationModel a = make_model(10, omega, T, theoretical_ratios());
  const MasterEquationModel b = make_model(10, omega, T4, theoretical_ratios());
  EXPECT_LT(total_variation(stationary_distribution(a), stationary_distribution(b)), 1e-12);
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(6);
  P0[0] = 1.0;
  // Gamma ~ T t, so s = Omega^2 t^2 T is invariant under T -> 4T, t -> t/2.
  const ObservableTrace ta = integrate_master(a, P0, {0.0, 1.0, 2.0});
  const ObservableTrace tb = integrate_master(b, P0, {0.0, 0.5, 1.0});
  EXPECT_LT((ta.P - tb.P).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitRates, RecoversSyntheticModel) {
  const std::vector<double> T_up{0.25, 0.18, 0.12, 0.07, 0.03};
  const BalanceRatios r = theoretical_ratios();
  const double omega = mhz_to_angular(1.0);
  const MasterEquationModel truth = make_model(10, omega, T_up, r);
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(6);
  P0[0] = 1.0;
  const std::vector<double> times = grid(0.6, 0.01);
  const ObservableTrace data = integrate_master(truth, P0, times);
  FitOptions opt;
  opt.t_early = 0.6;
  const MasterEquationModel fit = fit_rates(times, data.P, r, omega, 10, opt);
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(fit.T_up[n], T_up[n], 0.01 * T_up[n]) << n;
  EXPECT_LT(fit.fit_residual, 1e-6);
}

TEST(FitRates, FrozenDataGivesZeroRates) {
  const std::vector<double> times = grid(0.3, 0.01);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), 6);
  P.col(0).setOnes();
  const MasterEquationModel fit = fit_rates(times, P, theoretical_ratios(), mhz_to_angular(1.0), 10);
  for (double T : fit.T_up) EXPECT_LT(T, 1e-8);
  for (double T : fit.T_down) EXPECT_GE(T, 0.0);
  const MasterEquationModel idle = fit_rates(times, P, theoretical_ratios(), 0.0, 10);
  for (double T : idle.T_up) EXPECT_EQ(T, 0.0);
}

TEST(FitRates, Errors) {
  const std::vector<double> few{0.0, 0.1, 0.2, 0.3};
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(4, 6);
  P.col(0).setOnes();
  try {
    fit_rates(few, P, theoretical_ratios(), 1.0, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientData);
  }
  // Oscillating data no birth-death model can follow.
  const std::vector<double> times = grid(0.3, 0.01);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), 6);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double x = 0.5 * (1.0 - std::cos(2 * std::numbers::pi * 20.0 * times[k]));
    bad(static_cast<Eigen::Index>(k), 0) = 1.0 - x;
    bad(static_cast<Eigen::Index>(k), 5) = x;
  }
  FitOptions strict;
  strict.max_rms = 1e-3;
  try {
    fit_rates(times, bad, theoretical_ratios(), mhz_to_angular(1.0), 10, strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFitFailure);
  }
}

TEST(FitRates, DeterministicForSeed) {
  const BalanceRatios r = theoretical_ratios();
  const double omega = mhz_to_angular(1.0);
  const MasterEquationModel truth = make_model(10, omega, {0.2, 0.1, 0.1, 0.05, 0.02}, r);
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(6);
  P0[0] = 1.0;
  const std::vector<double> times = grid(0.3, 0.01);
  Eigen::MatrixXd P = integrate_master(truth, P0, times).P;
  P.bottomRows(P.rows() - 1).array() += 1e-3 * Eigen::ArrayXXd::Random(P.rows() - 1, P.cols());
  FitOptions opt;
  opt.seed = 7;
  const MasterEquationModel a = fit_rates(times, P, r, omega, 10, opt);
  const MasterEquationModel b = fit_rates(times, P, r, omega, 10, opt);
  EXPECT_EQ(a.T_up, b.T_up);
}

TEST(MasterModel, JsonShape) {
  const MasterEquationModel m = make_model(10, mhz_to_angular(1.0), {0.5, 0.4, 0.3, 0.2, 0.1}, theoretical_ratios());
  const nlohmann::json j = to_json(m);
  EXPECT_EQ(j.at("n_max"), 5);
  EXPECT_NEAR(j.at("omega_MHz").get<double>(), 1.0, 1e-14);
  EXPECT_EQ(j.at("T_up").size(), 5u);
  EXPECT_EQ(j.at("T_down").size(), 5u);
  EXPECT_EQ(j.at("ratios").size(), 5u);
  EXPECT_TRUE(j.contains("fit_residual"));
  EXPECT_TRUE(j.contains("ratio_provenance"));
}

}  // namespace
}  // namespace rydchain
