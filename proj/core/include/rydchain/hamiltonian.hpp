#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>

#include "rydchain/geometry.hpp"

namespace rydchain {

using cplx = std::complex<double>;

/// Ising-like chain H = sum_{i>j} V_ij n_i n_j + (Omega/2) sum_i sx_i - (Delta/2) sum_i sz_i.
/// omega and delta are angular frequencies (rad/us).
struct SpinSystem {
  InteractionMatrix V;
  double omega = 0.0;
  double delta = 0.0;

  int N() const { return V.size(); }
  std::uint64_t dimension() const { return std::uint64_t{1} << N(); }
};

/// Throws invalid-parameter on a negative Rabi frequency or a non-symmetric V.
void validate(const SpinSystem& sys);

inline constexpr int kMaxSparseSites = 20;
inline constexpr int kMaxDenseSites = 14;
inline constexpr int kMaxMatrixFreeSites = 28;

/// Real symmetric operator in the 2^N product basis. The Hamiltonian has no
/// complex entries for real Omega and Delta, so the real type carries it exactly.
struct SparseOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
  bool is_hermitian(double tol = 0.0) const;
  /// "row col value" lines for debugging.
  void write_coordinate_list(std::ostream& os) const;
};

SparseOperator build_hamiltonian(const SpinSystem& sys, int max_sites = kMaxSparseSites);

Eigen::MatrixXd dense_hamiltonian(const SpinSystem& sys, int max_sites = kMaxDenseSites);

/// Diagonal of H (interaction plus detuning) for every basis state.
Eigen::VectorXd diagonal_energies(const SpinSystem& sys);

/// Number of up spins for every basis state.
Eigen::VectorXi excitation_numbers(int N);

/// Matrix-free H with the diagonal cached; the hot path of every propagator.
class MatrixFreeHamiltonian {
 public:
  explicit MatrixFreeHamiltonian(const SpinSystem& sys);

  int sites() const { return n_; }
  Eigen::Index dimension() const { return diag_.size(); }
  const Eigen::VectorXd& diagonal() const { return diag_; }
  double half_omega() const { return half_omega_; }

  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  /// Infinity-norm bound max|diag| + N Omega / 2.
  double norm_bound() const;

 private:
  int n_;
  double half_omega_;
  Eigen::VectorXd diag_;
};

Eigen::VectorXcd apply(const SpinSystem& sys, const Eigen::VectorXcd& state);

}  // namespace rydchain
