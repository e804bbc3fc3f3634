#include "rydchain/krylov.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rydchain/error.hpp"

namespace rydchain {

namespace {

constexpr double kGamma = 0.9;
constexpr double kMaxGrowth = 5.0;
constexpr double kBreakdownTol = 1e-12;
constexpr double kReorthogonalize = 0.7071067811865476;

std::span<const std::complex<double>> view(const Eigen::VectorXcd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

KrylovStats krylov_propagate(const LinearOperator& A, double norm_estimate, Eigen::VectorXcd w,
                             std::span<const double> times, const KrylovOptions& options,
                             const std::function<void(std::size_t, const Eigen::VectorXcd&)>& observe) {
  KrylovStats stats;
  if (times.empty()) return stats;
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0)
    throw Error(ErrorKind::kInvalidParameter, "output times must be ascending and non-negative");

  const Eigen::Index n = w.size();
  const int m = std::max(2, std::min<int>(options.max_dim, static_cast<int>(n)));
  const double tol = options.tol;
  const double t_end = times.back();
  const double eps_t = 1e-12 * std::max(1.0, t_end);

  std::size_t next = 0;
  while (next < times.size() && times[next] <= eps_t) observe(next++, w);

  const double anorm = std::max(norm_estimate, 1e-300);
  double beta = w.norm();
  // Classic first-step heuristic from the Krylov a priori bound.
  const double fact = std::pow((m + 1) / std::numbers::e, m + 1) * std::sqrt(2.0 * std::numbers::pi * (m + 1));
  double t_new = (1.0 / anorm) * std::pow((fact * tol) / (4.0 * std::max(beta, 1e-300) * anorm), 1.0 / m);

  Eigen::MatrixXcd V(n, m + 1);
  Eigen::VectorXcd p(n);
  Eigen::VectorXcd h(m + 1);
  double t_now = 0.0;

  while (next < times.size()) {
    beta = w.norm();
    if (beta == 0.0) {
      while (next < times.size()) observe(next++, w);
      break;
    }
    double t_step = std::min(t_end - t_now, t_new);

    // Arnoldi with classical Gram-Schmidt, repeated once when cancellation is
    // severe; projections stay matrix-vector products over the whole basis.
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 2, m + 2);
    V.col(0) = w / beta;
    int mb = m;
    bool breakdown = false;
    for (int j = 0; j < m; ++j) {
      A(view(V.col(j)), {p.data(), static_cast<std::size_t>(n)});
      ++stats.matvecs;
      double before = p.norm();
      double s = 0.0;
      for (int pass = 0; pass < 2; ++pass) {
        h.head(j + 1).noalias() = V.leftCols(j + 1).adjoint() * p;
        p.noalias() -= V.leftCols(j + 1) * h.head(j + 1);
        H.col(j).head(j + 1) += h.head(j + 1);
        s = p.norm();
        if (s > kReorthogonalize * before) break;
        before = s;
      }
      if (s < kBreakdownTol) {
        breakdown = true;
        mb = j + 1;
        t_step = t_end - t_now;
        break;
      }
      H(j + 1, j) = s;
      V.col(j + 1) = p / s;
    }

    double avnorm = 0.0;
    if (!breakdown) {
      H(m + 1, m) = 1.0;
      A(view(V.col(m)), {p.data(), static_cast<std::size_t>(n)});
      ++stats.matvecs;
      avnorm = p.norm();
    }

    const int mx = breakdown ? mb : m + 2;
    Eigen::MatrixXcd F;
    double err_loc = 0.0;
    double xm = 1.0 / m;
    int rejections = 0;
    while (true) {
      F = (t_step * H.topLeftCorner(mx, mx)).exp();
      if (breakdown) {
        err_loc = kBreakdownTol;
        break;
      }
      const double phi1 = std::abs(beta * F(m, 0));
      const double phi2 = std::abs(beta * F(m + 1, 0) * avnorm);
      if (phi1 > 10.0 * phi2) {
        err_loc = phi2;
      } else if (phi1 > phi2) {
        err_loc = (phi1 * phi2) / (phi1 - phi2);
      } else {
        err_loc = phi1;
        xm = 1.0 / (m - 1);
      }
      if (err_loc <= tol) break;
      if (++rejections > options.max_rejections) {
        throw Error(ErrorKind::kConvergenceFailure,
                    "Krylov step rejected " + std::to_string(rejections) + " times at t = " + std::to_string(t_now));
      }
      t_step = kGamma * t_step * std::pow(tol / err_loc, xm);
    }
    stats.rejections += rejections;

    // Columns used for reconstruction: the corrected scheme keeps V_{m+1}.
    const int used = breakdown ? mb : m + 1;
    const double t_stop = t_now + t_step;
    while (next < times.size() && times[next] <= t_stop + eps_t) {
      const double tau = times[next] - t_now;
      const Eigen::MatrixXcd Ft = tau == t_step ? F : Eigen::MatrixXcd((tau * H.topLeftCorner(mx, mx)).exp());
      const Eigen::VectorXcd out = V.leftCols(used) * (beta * Ft.col(0).head(used));
      observe(next++, out);
    }
    w = V.leftCols(used) * (beta * F.col(0).head(used));
    t_now = t_stop;
    ++stats.steps;
    stats.accumulated_error += std::max(err_loc, anorm * 1e-16);

    const double growth = err_loc > 0.0 ? kGamma * std::pow(tol / err_loc, xm) : kMaxGrowth;
    t_new = t_step * std::clamp(growth, 0.2, kMaxGrowth);
  }
  return stats;
}

}  // namespace rydchain
