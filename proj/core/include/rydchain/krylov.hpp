#pragma once

#include <Eigen/Core>

#include <complex>
#include <functional>
#include <span>

namespace rydchain {

using LinearOperator = std::function<void(std::span<const std::complex<double>>, std::span<std::complex<double>>)>;

struct KrylovOptions {
  int max_dim = 30;
  /// Local error allowed per accepted step (absolute, for a unit vector).
  double tol = 1e-10;
  int max_rejections = 30;
};

struct KrylovStats {
  int steps = 0;
  int rejections = 0;
  long matvecs = 0;
  double accumulated_error = 0.0;
};

/// Adaptive Krylov (Arnoldi) evaluation of w(t) = exp(t A) w(0) at each time in
/// `times` (ascending, >= 0). The step size is chosen from the local error
/// estimate alone; outputs falling inside an accepted step are evaluated from
/// the same Krylov basis, so results do not depend on the output grid.
///
/// `norm_estimate` bounds ||A|| and only seeds the first step.
KrylovStats krylov_propagate(const LinearOperator& A, double norm_estimate, Eigen::VectorXcd w,
                             std::span<const double> times, const KrylovOptions& options,
                             const std::function<void(std::size_t, const Eigen::VectorXcd&)>& observe);

}  // namespace rydchain
