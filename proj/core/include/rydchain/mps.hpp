#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "rydchain/hamiltonian.hpp"
#include "rydchain/trace.hpp"

namespace rydchain {

/// Open-boundary MPS. site[i][s] is the chi_i x chi_{i+1} matrix for physical
/// state s (0 = down, 1 = up); chi_0 = chi_N = 1.
struct MatrixProductState {
  std::vector<std::array<Eigen::MatrixXcd, 2>> site;

  int sites() const { return static_cast<int>(site.size()); }
  std::vector<int> bond_dims() const;  // chi_1 .. chi_{N-1}
  int max_bond() const;

  /// Product state; bit i of `ups` (site 0 = most significant) marks spin up.
  static MatrixProductState product(int N, std::uint64_t ups = 0);
};

cplx overlap(const MatrixProductState& bra, const MatrixProductState& ket);
double norm(const MatrixProductState& psi);
void scale(MatrixProductState& psi, cplx factor);
/// Amplitudes in the shared basis ordering (site 0 = most significant bit).
Eigen::VectorXcd to_dense(const MatrixProductState& psi);
/// <n_i> for every site, normalized by <psi|psi>.
Eigen::VectorXd site_occupations(const MatrixProductState& psi);

/// W[i][s_out][s_in] is a (left x right) matrix; edge bonds have dimension 1.
struct MatrixProductOperator {
  std::vector<std::array<std::array<Eigen::MatrixXcd, 2>, 2>> W;

  int sites() const { return static_cast<int>(W.size()); }
  static MatrixProductOperator identity(int N);
};

/// Exact application; bond dimensions multiply.
MatrixProductState apply(const MatrixProductOperator& op, const MatrixProductState& psi);

struct TrotterFactors {
  Eigen::Matrix2cd half_x;  // exp(-i (Omega/2) sigma_x dt/2)
  MatrixProductOperator z;  // exp(-i h_z dt), bond dimension 4
};

/// Factors of exp(-i H dt) ~ e^{-i h_x dt/2} e^{-i h_z dt} e^{-i h_x dt/2}. h_z keeps
/// the nearest and next-nearest couplings V(i,i+1), V(i,i+2) and the detuning.
TrotterFactors trotter_step_mpo(const SpinSystem& sys, double dt);

void apply_single_site(MatrixProductState& psi, const Eigen::Matrix2cd& u);

struct CompressionResult {
  MatrixProductState psi;
  double fidelity = 1.0;  // |<out|in>| / (||out|| ||in||)
  int sweeps = 0;
};

inline constexpr int kDefaultMaxSweeps = 50;

/// Truncated-SVD guess refined by two-site sweeps maximizing the overlap with
/// the input, stopping when the overlap gain of a full sweep drops below tol.
CompressionResult variational_compress(const MatrixProductState& psi, int chi_max, double tol = 1e-10,
                                       int max_sweeps = kDefaultMaxSweeps);

/// P_n for n = 0..N from the generating function at N + 1 angles.
Eigen::VectorXd number_distribution_mps(const MatrixProductState& psi);

struct TebdOptions {
  double t_max = 3.0;
  double dt_out = 0.02;
  /// Upper bound on Omega * dt; dt is the largest value dividing dt_out under it.
  double omega_dt = 0.013;
  int chi_max = 64;
  double tol = 1e-10;
  int max_sweeps = kDefaultMaxSweeps;
  /// A single compression losing more than this fidelity is a truncation overflow.
  double max_infidelity = 1e-2;
  /// Called after every full step with (step, t, bond dimensions).
  std::function<void(long, double, const std::vector<int>&)> on_step;
};

/// Step size used by tebd_evolve for the given drive.
double tebd_step(double omega, const TebdOptions& options);

ObservableTrace tebd_evolve(const SpinSystem& sys, const TebdOptions& options = {});

}  // namespace rydchain
