#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "rydchain/census.hpp"
#include "rydchain/error.hpp"
#include "rydchain/hamiltonian.hpp"
#include "rydchain/units.hpp"

namespace rydchain {
using namespace units;
namespace {

// Oracle: H assembled from Kronecker products of single-site operators with
// site 0 as the leftmost factor.
Eigen::MatrixXd kron_site(const Eigen::Matrix2d& op, int site, int N) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd f = (k == site) ? Eigen::MatrixXd(op) : Eigen::MatrixXd::Identity(2, 2);
    out = Eigen::kroneckerProduct(out, f).eval();
  }
  return out;
}

Eigen::MatrixXd kronecker_hamiltonian(const SpinSystem& sys) {
  const int N = sys.N();
  Eigen::Matrix2d n, sx, sz;
  n << 0, 0, 0, 1;
  sx << 0, 1, 1, 0;
  sz << -1, 0, 0, 1;
  const Eigen::Index dim = Eigen::Index{1} << N;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < i; ++j) H += sys.V.V(i, j) * kron_site(n, i, N) * kron_site(n, j, N);
    H += 0.5 * sys.omega * kron_site(sx, i, N) - 0.5 * sys.delta * kron_site(sz, i, N);
  }
  return H;
}

SpinSystem chain_system(int N, double theta, double omega_mhz, double delta_mhz) {
  return {rescale_to_v12(interaction_matrix(build_chain(N, 4.0, theta), 470.0), 20.0), mhz_to_angular(omega_mhz),
          mhz_to_angular(delta_mhz)};
}

TEST(BuildHamiltonian, MatchesKroneckerOracle) {
  for (int N : {1, 2, 3, 6}) {
    const SpinSystem sys = chain_system(N, 70.0, 1.0, 0.37);
    const Eigen::MatrixXd sparse = Eigen::MatrixXd(build_hamiltonian(sys).matrix);
    const Eigen::MatrixXd oracle = kronecker_hamiltonian(sys);
    EXPECT_LT((sparse - oracle).cwiseAbs().maxCoeff(), 1e-12) << N;
    EXPECT_LT((dense_hamiltonian(sys) - oracle).cwiseAbs().maxCoeff(), 1e-12) << N;
  }
}

TEST(BuildHamiltonian, SingleAtomEigenvalues) {
  SpinSystem sys = chain_system(1, 180.0, 1.0, 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(sys));
  EXPECT_NEAR(es.eigenvalues()[0], -sys.omega / 2, 1e-14);
  EXPECT_NEAR(es.eigenvalues()[1], sys.omega / 2, 1e-14);
}

TEST(BuildHamiltonian, CollectivePairRabiFrequency) {
  const SpinSystem sys = chain_system(2, 180.0, 1.0, 0.0);
  const Eigen::MatrixXd H = dense_hamiltonian(sys);
  Eigen::VectorXd dd = Eigen::VectorXd::Zero(4), w = Eigen::VectorXd::Zero(4);
  dd[0] = 1.0;
  w[1] = w[2] = 1.0 / std::sqrt(2.0);
  // Coupling within the restricted two-level space is half the collective Rabi frequency.
  EXPECT_NEAR(2.0 * w.dot(H * dd), std::sqrt(2.0) * sys.omega, 1e-12);
}

TEST(BuildHamiltonian, HermitianDiagonalAndCouplingStructure) {
  const SpinSystem sys = chain_system(8, 60.0, 1.3, -0.4);
  const SparseOperator op = build_hamiltonian(sys);
  EXPECT_TRUE(op.is_hermitian());
  const Eigen::VectorXd diag = diagonal_energies(sys);
  for (Eigen::Index r = 0; r < op.dimension(); ++r) {
    int offdiag = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.matrix, r); it; ++it) {
      if (it.col() == r) {
        EXPECT_NEAR(it.value(), diag[r], 1e-12);
      } else {
        ++offdiag;
        EXPECT_EQ(std::popcount(static_cast<std::uint64_t>(it.col() ^ r)), 1);
        EXPECT_NEAR(it.value(), sys.omega / 2, 1e-15);
      }
    }
    EXPECT_LE(offdiag, 8);
  }
}

TEST(BuildHamiltonian, DiagonalFormula) {
  const SpinSystem sys = chain_system(5, 90.0, 1.0, 0.8);
  const Eigen::VectorXd diag = diagonal_energies(sys);
  for (std::uint64_t s = 0; s < 32; ++s) {
    double e = 0.0;
    for (int i = 0; i < 5; ++i) {
      const int si = (s & site_mask(5, i)) ? 1 : 0;
      e -= 0.5 * sys.delta * (2 * si - 1);
      for (int j = 0; j < i; ++j) e += sys.V.V(i, j) * si * ((s & site_mask(5, j)) ? 1 : 0);
    }
    EXPECT_NEAR(diag[static_cast<Eigen::Index>(s)], e, 1e-12);
  }
}

TEST(BuildHamiltonian, DenseCap) {
  try {
    dense_hamiltonian(chain_system(15, 180.0, 1.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionOverflow);
  }
}

TEST(BuildHamiltonian, DeltaSignFlipWithoutInteractions) {
  SpinSystem plus = chain_system(2, 180.0, 1.0, 0.6);
  plus.V.V.setZero();
  SpinSystem minus = plus;
  minus.delta = -plus.delta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(dense_hamiltonian(plus)), b(dense_hamiltonian(minus));
  EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Apply, AllDownState) {
  const SpinSystem sys = chain_system(6, 180.0, 1.0, 0.0);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(64);
  psi[0] = 1.0;
  const Eigen::VectorXcd out = rydchain::apply(sys, psi);
  EXPECT_EQ(out[0], cplx(0.0));
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(out[static_cast<Eigen::Index>(site_mask(6, i))].real(), sys.omega / 2, 1e-15);
  EXPECT_NEAR(out.squaredNorm(), 6 * sys.omega * sys.omega / 4, 1e-12);
}

TEST(Apply, MatchesSparseProductAtTenSites) {
  const SpinSystem sys = chain_system(10, 60.0, 1.0, 0.25);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Eigen::VectorXcd psi(1024);
  for (auto& a : psi) a = cplx(g(rng), g(rng));
  const Eigen::VectorXcd ref = build_hamiltonian(sys).matrix.cast<cplx>() * psi;
  EXPECT_LT((rydchain::apply(sys, psi) - ref).norm() / ref.norm(), 1e-12);
  EXPECT_THROW(rydchain::apply(sys, Eigen::VectorXcd::Zero(10)), Error);
}

TEST(Apply, NormBoundDominatesSpectrum) {
  const SpinSystem sys = chain_system(8, 60.0, 1.0, 0.3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(sys));
  const double spectral = es.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_GE(MatrixFreeHamiltonian(sys).norm_bound(), spectral - 1e-12);
}

TEST(SparseOperator, CoordinateListDump) {
  std::ostringstream os;
  build_hamiltonian(chain_system(1, 180.0, 1.0, 0.0)).write_coordinate_list(os);
  EXPECT_NE(os.str().find("0 1 "), std::string::npos);
}

TEST(Validate, RejectsBadSystems) {
  SpinSystem sys = chain_system(3, 180.0, 1.0, 0.0);
  sys.omega = -1.0;
  EXPECT_THROW(validate(sys), Error);
  sys.omega = 1.0;
  sys.V.V(0, 1) += 1.0;
  EXPECT_THROW(validate(sys), Error);
}

}  // namespace
}  // namespace rydchain
