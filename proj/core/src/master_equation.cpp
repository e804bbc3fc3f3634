#include "rydchain/master_equation.hpp"

#include <nlohmann/json.hpp>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rydchain/error.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

bool BalanceRatios::complete() const {
  return std::all_of(ratios.begin(), ratios.end(), [](double r) { return std::isfinite(r) && r > 0.0; });
}

BalanceRatios balance_ratios(const Eigen::VectorXd& P_eq, double eps) {
  if ((P_eq.array() < -1e-12).any()) throw Error(ErrorKind::kInvalidParameter, "P_eq has negative entries");
  if ((P_eq.array() > eps).count() < 2)
    throw Error(ErrorKind::kDegenerateDistribution, "fewer than two populated excitation numbers");
  BalanceRatios out;
  for (Eigen::Index n = 1; n < P_eq.size(); ++n) {
    const bool defined = P_eq[n] > eps && P_eq[n - 1] > eps;
    out.ratios.push_back(defined ? P_eq[n - 1] / P_eq[n] : std::numeric_limits<double>::quiet_NaN());
    out.provenance.push_back(RatioProvenance::kMeasured);
  }
  return out;
}

BalanceRatios with_theoretical_fallback(const BalanceRatios& measured, const std::vector<std::uint64_t>& nu) {
  BalanceRatios out = measured;
  for (int n = 1; n <= out.n_max(); ++n) {
    double& r = out.ratios[n - 1];
    if (std::isfinite(r) && r > 0.0) continue;
    if (n >= static_cast<int>(nu.size()) || nu[n] == 0)
      throw Error(ErrorKind::kDegenerateDistribution, "no theoretical ratio for n = " + std::to_string(n));
    r = static_cast<double>(nu[n - 1]) / static_cast<double>(nu[n]);
    out.provenance[n - 1] = RatioProvenance::kTheoretical;
  }
  return out;
}

MasterEquationModel make_model(int atoms, double omega, std::vector<double> T_up, const BalanceRatios& ratios) {
  if (!ratios.complete()) throw Error(ErrorKind::kInvalidParameter, "balance ratios have undefined entries");
  if (static_cast<int>(T_up.size()) != ratios.n_max())
    throw Error(ErrorKind::kLengthMismatch, "T_up and ratio counts differ");
  for (double t : T_up)
    if (!(t >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "rate coefficients must be >= 0");
  MasterEquationModel m;
  m.atoms = atoms;
  m.n_max = ratios.n_max();
  m.omega = omega;
  m.T_up = std::move(T_up);
  m.ratios = ratios;
  for (int n = 1; n <= m.n_max; ++n) m.T_down.push_back(m.T_up[n - 1] * ratios.ratios[n - 1]);
  return m;
}

Eigen::MatrixXd generator(const MasterEquationModel& model) {
  const int K = model.n_max + 1;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(K, K);
  for (int n = 0; n < model.n_max; ++n) {
    Q(n + 1, n) += model.T_up[n];
    Q(n, n) -= model.T_up[n];
    Q(n, n + 1) += model.T_down[n];
    Q(n + 1, n + 1) -= model.T_down[n];
  }
  return Q;
}

Eigen::VectorXd stationary_distribution(const MasterEquationModel& model) {
  Eigen::VectorXd pi(model.n_max + 1);
  pi[0] = 1.0;
  for (int n = 1; n <= model.n_max; ++n) pi[n] = pi[n - 1] / model.ratios.ratios[n - 1];
  return pi / pi.sum();
}

namespace {

// Detailed balance makes Q similar to a symmetric tridiagonal matrix,
// S = Pi^{-1/2} Q Pi^{1/2}, so exp(Q s) = Pi^{1/2} U exp(Lambda s) U^T Pi^{-1/2}
// stays accurate however stiff the rates are.
class BirthDeathPropagator {
 public:
  explicit BirthDeathPropagator(const MasterEquationModel& model) {
    sqrt_pi_ = stationary_distribution(model).cwiseSqrt();
    const Eigen::MatrixXd Q = generator(model);
    Eigen::MatrixXd S = sqrt_pi_.cwiseInverse().asDiagonal() * Q * sqrt_pi_.asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    // The zero mode is sqrt(pi) exactly. Diagonalizing S on its orthogonal
    // complement keeps roundoff at large rates out of the stationary state
    // and the basis orthogonal when eigenvalues are degenerate.
    const Eigen::Index K = S.rows();
    const Eigen::VectorXd u = sqrt_pi_ / sqrt_pi_.norm();
    const Eigen::MatrixXd H = Eigen::HouseholderQR<Eigen::MatrixXd>(u).householderQ();
    const Eigen::MatrixXd B = H.rightCols(K - 1);
    U_.resize(K, K);
    lambda_.resize(K);
    U_.col(0) = u;
    lambda_[0] = 0.0;
    if (K > 1) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B.transpose() * S * B);
      U_.rightCols(K - 1) = B * es.eigenvectors();
      lambda_.tail(K - 1) = es.eigenvalues().cwiseMin(0.0);
    }
  }

  Eigen::VectorXd evolve(const Eigen::VectorXd& P0, double s) const {
    Eigen::VectorXd y = U_.transpose() * P0.cwiseQuotient(sqrt_pi_);
    y.array() *= (lambda_.array() * s).exp();
    return sqrt_pi_.cwiseProduct(U_ * y);
  }

 private:
  Eigen::VectorXd sqrt_pi_;
  Eigen::MatrixXd U_;
  Eigen::VectorXd lambda_;
};

}  // namespace

ObservableTrace integrate_master(const MasterEquationModel& model, const Eigen::VectorXd& P0,
                                 const std::vector<double>& times) {
  if (P0.size() != model.n_max + 1) throw Error(ErrorKind::kLengthMismatch, "P0 length must be n_max + 1");
  if (std::abs(P0.sum() - 1.0) > 1e-9 || (P0.array() < 0.0).any())
    throw Error(ErrorKind::kInvalidParameter, "P0 must be a probability distribution");
  const BirthDeathPropagator prop(model);
  ObservableTrace tr;
  tr.atoms = model.atoms;
  tr.times = times;
  tr.P.resize(static_cast<Eigen::Index>(times.size()), model.n_max + 1);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double s = model.omega * model.omega * times[k] * times[k];
    const Eigen::VectorXd P = prop.evolve(P0, s);
    if (!P.allFinite()) throw Error(ErrorKind::kStepRejection, "master-equation propagator produced non-finite values");
    const auto row = static_cast<Eigen::Index>(k);
    tr.P.row(row) = P.transpose();
    auto& d = tr.diagnostics;
    d.max_probability_error = std::max(d.max_probability_error, std::abs(P.sum() - 1.0));
    d.min_population = std::min(d.min_population, P.minCoeff());
  }
  derive_moments(tr);
  return tr;
}

namespace {

// Residuals of the integrated model in log-T parameters.
struct RateResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  int atoms;
  double omega;
  const BalanceRatios* ratios;
  std::vector<double> s;     // Omega^2 t^2 per sample
  Eigen::MatrixXd target;    // samples x (n_max + 1)

  int inputs() const { return ratios->n_max(); }
  int values() const { return static_cast<int>(target.size()); }

  static std::vector<double> rates(const Eigen::VectorXd& x) {
    std::vector<double> T(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) T[i] = std::exp(std::clamp(x[i], -60.0, 30.0));
    return T;
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    const BirthDeathPropagator prop(make_model(atoms, omega, rates(x), *ratios));
    const Eigen::Index K = target.cols();
    Eigen::VectorXd P0 = Eigen::VectorXd::Zero(K);
    P0[0] = 1.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const Eigen::VectorXd P = prop.evolve(P0, s[k]);
      for (Eigen::Index n = 0; n < K; ++n) fvec[static_cast<Eigen::Index>(k) * K + n] = P[n] - target(k, n);
    }
    return 0;
  }
};

}  // namespace

MasterEquationModel fit_rates(const std::vector<double>& times, const Eigen::MatrixXd& P, const BalanceRatios& ratios,
                              double omega, int atoms, const FitOptions& options) {
  if (!ratios.complete()) throw Error(ErrorKind::kInvalidParameter, "balance ratios have undefined entries");
  const int n_max = ratios.n_max();
  if (P.cols() < n_max + 1) throw Error(ErrorKind::kLengthMismatch, "P has fewer columns than n_max + 1");
  if (static_cast<Eigen::Index>(times.size()) != P.rows()) throw Error(ErrorKind::kLengthMismatch, "times/P mismatch");
  if (times.empty() || times.front() != 0.0 || std::abs(P(0, 0) - 1.0) > 1e-6)
    throw Error(ErrorKind::kInsufficientData, "early-time data must start at t = 0 with P_0 = 1");

  std::vector<Eigen::Index> rows;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] <= options.t_early + 1e-12) rows.push_back(static_cast<Eigen::Index>(k));
  if (static_cast<int>(rows.size()) < options.min_samples)
    throw Error(ErrorKind::kInsufficientData, "only " + std::to_string(rows.size()) + " samples in the early window");

  if (omega == 0.0) {
    MasterEquationModel m = make_model(atoms, omega, std::vector<double>(n_max, 0.0), ratios);
    return m;
  }

  RateResidual f{atoms, omega, &ratios, {}, Eigen::MatrixXd(rows.size(), n_max + 1)};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double t = times[rows[k]];
    f.s.push_back(omega * omega * t * t);
    f.target.row(static_cast<Eigen::Index>(k)) = P.row(rows[k]).head(n_max + 1);
  }

  // P_1 ~ Omega^2 t^2 T_0 at the first nonzero sample sets the scale of the
  // first guess; later samples already feel the depletion of n = 1.
  double base = 1e-12;
  for (Eigen::Index k = 0; k < f.target.rows(); ++k) {
    if (f.s[static_cast<std::size_t>(k)] > 0.0) {
      base = std::max(f.target(k, 1) / f.s[static_cast<std::size_t>(k)], 1e-12);
      break;
    }
  }
  const double factors[] = {1.0, 0.3, 3.0, 0.1, 10.0};
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> jitter(0.0, 0.1);

  Eigen::VectorXd best_x;
  double best_rms = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd x(n_max);
    for (int n = 0; n < n_max; ++n)
      x[n] = std::log(base * factors[r % 5]) + (r == 0 ? 0.0 : jitter(rng));
    Eigen::NumericalDiff<RateResidual> diff(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<RateResidual>> lm(diff);
    lm.parameters.maxfev = 4000;
    lm.minimize(x);
    Eigen::VectorXd res(f.values());
    f(x, res);
    const double rms = std::sqrt(res.squaredNorm() / static_cast<double>(res.size()));
    if (std::isfinite(rms) && rms < best_rms) {
      best_rms = rms;
      best_x = x;
    }
  }
  if (!(best_rms <= options.max_rms))
    throw Error(ErrorKind::kFitFailure, "rate fit RMS residual " + std::to_string(best_rms) + " exceeds threshold");
  MasterEquationModel m = make_model(atoms, omega, RateResidual::rates(best_x), ratios);
  m.fit_residual = best_rms;
  return m;
}

nlohmann::json to_json(const MasterEquationModel& model) {
  nlohmann::json ratios = nlohmann::json::array(), provenance = nlohmann::json::array();
  for (int n = 0; n < model.ratios.n_max(); ++n) {
    ratios.push_back(model.ratios.ratios[n]);
    provenance.push_back(model.ratios.provenance[n] == RatioProvenance::kMeasured ? "measured" : "theoretical");
  }
  return {{"n_max", model.n_max},
          {"omega_MHz", units::angular_to_mhz(model.omega)},
          {"T_up", model.T_up},
          {"T_down", model.T_down},
          {"ratios", ratios},
          {"ratio_provenance", provenance},
          {"fit_residual", model.fit_residual}};
}

}  // namespace rydchain
