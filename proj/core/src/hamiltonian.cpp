#include "rydchain/hamiltonian.hpp"

#include <bit>
#include <ostream>
#include <vector>

#include "rydchain/error.hpp"

namespace rydchain {

namespace {

void check_sites(int N, int cap, const char* what) {
  if (N > cap) {
    throw Error(ErrorKind::kDimensionOverflow,
                std::string(what) + " limited to N <= " + std::to_string(cap) + ", got " + std::to_string(N));
  }
}

}  // namespace

void validate(const SpinSystem& sys) {
  if (sys.N() < 1) throw Error(ErrorKind::kInvalidParameter, "spin system has no sites");
  if (sys.omega < 0.0) throw Error(ErrorKind::kInvalidParameter, "Rabi frequency must be >= 0");
  if (sys.V.V.rows() != sys.V.V.cols()) throw Error(ErrorKind::kInvalidParameter, "interaction matrix not square");
  if ((sys.V.V - sys.V.V.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw Error(ErrorKind::kInvalidParameter, "interaction matrix not symmetric");
}

Eigen::VectorXd diagonal_energies(const SpinSystem& sys) {
  const int N = sys.N();
  check_sites(N, kMaxMatrixFreeSites, "diagonal");
  const std::uint64_t dim = sys.dimension();
  // coupling[b][c] = V between the sites stored at bits b and c
  std::vector<double> coupling(static_cast<std::size_t>(N) * N);
  for (int b = 0; b < N; ++b)
    for (int c = 0; c < N; ++c) coupling[b * N + c] = sys.V.V(N - 1 - b, N - 1 - c);

  Eigen::VectorXd e(static_cast<Eigen::Index>(dim));
  e[0] = 0.0;
  for (std::uint64_t s = 1; s < dim; ++s) {
    const int b = std::countr_zero(s);
    std::uint64_t rest = s & (s - 1);
    double acc = e[static_cast<Eigen::Index>(rest)];
    while (rest) {
      const int c = std::countr_zero(rest);
      acc += coupling[b * N + c];
      rest &= rest - 1;
    }
    e[static_cast<Eigen::Index>(s)] = acc;
  }
  if (sys.delta != 0.0) {
    for (std::uint64_t s = 0; s < dim; ++s)
      e[static_cast<Eigen::Index>(s)] -= 0.5 * sys.delta * (2.0 * std::popcount(s) - N);
  }
  return e;
}

Eigen::VectorXi excitation_numbers(int N) {
  const std::uint64_t dim = std::uint64_t{1} << N;
  Eigen::VectorXi n(static_cast<Eigen::Index>(dim));
  for (std::uint64_t s = 0; s < dim; ++s) n[static_cast<Eigen::Index>(s)] = std::popcount(s);
  return n;
}

bool SparseOperator::is_hermitian(double tol) const {
  Eigen::SparseMatrix<double, Eigen::RowMajor> diff = matrix - Eigen::SparseMatrix<double, Eigen::RowMajor>(matrix.transpose());
  for (int k = 0; k < diff.outerSize(); ++k)
    for (decltype(diff)::InnerIterator it(diff, k); it; ++it)
      if (std::abs(it.value()) > tol) return false;
  return true;
}

void SparseOperator::write_coordinate_list(std::ostream& os) const {
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (decltype(matrix)::InnerIterator it(matrix, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

SparseOperator build_hamiltonian(const SpinSystem& sys, int max_sites) {
  validate(sys);
  const int N = sys.N();
  check_sites(N, max_sites, "sparse Hamiltonian");
  const Eigen::VectorXd diag = diagonal_energies(sys);
  const auto dim = static_cast<Eigen::Index>(sys.dimension());

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(dim) * (N + 1));
  for (Eigen::Index s = 0; s < dim; ++s) {
    if (diag[s] != 0.0) entries.emplace_back(s, s, diag[s]);
    if (sys.omega != 0.0)
      for (int b = 0; b < N; ++b) entries.emplace_back(s, s ^ (Eigen::Index{1} << b), 0.5 * sys.omega);
  }
  SparseOperator op;
  op.matrix.resize(dim, dim);
  op.matrix.setFromTriplets(entries.begin(), entries.end());
  return op;
}

Eigen::MatrixXd dense_hamiltonian(const SpinSystem& sys, int max_sites) {
  check_sites(sys.N(), max_sites, "dense Hamiltonian");
  return Eigen::MatrixXd(build_hamiltonian(sys, max_sites).matrix);
}

MatrixFreeHamiltonian::MatrixFreeHamiltonian(const SpinSystem& sys)
    : n_(sys.N()), half_omega_(0.5 * sys.omega), diag_() {
  validate(sys);
  check_sites(n_, kMaxMatrixFreeSites, "matrix-free Hamiltonian");
  diag_ = diagonal_energies(sys);
}

void MatrixFreeHamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const auto dim = static_cast<std::size_t>(diag_.size());
  if (in.size() != dim || out.size() != dim)
    throw Error(ErrorKind::kLengthMismatch, "state length does not match 2^N");
  for (std::size_t s = 0; s < dim; ++s) out[s] = diag_[static_cast<Eigen::Index>(s)] * in[s];
  if (half_omega_ == 0.0) return;
  // Each bit flip pairs the halves of blocks of size 2^(b+1).
  for (int b = 0; b < n_; ++b) {
    const std::size_t stride = std::size_t{1} << b;
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
      for (std::size_t k = base; k < base + stride; ++k) {
        out[k] += half_omega_ * in[k + stride];
        out[k + stride] += half_omega_ * in[k];
      }
    }
  }
}

double MatrixFreeHamiltonian::norm_bound() const {
  return diag_.cwiseAbs().maxCoeff() + n_ * half_omega_;
}

Eigen::VectorXcd apply(const SpinSystem& sys, const Eigen::VectorXcd& state) {
  if (state.size() != static_cast<Eigen::Index>(sys.dimension()))
    throw Error(ErrorKind::kLengthMismatch, "state length does not match 2^N");
  MatrixFreeHamiltonian h(sys);
  Eigen::VectorXcd out(state.size());
  h.apply({state.data(), static_cast<std::size_t>(state.size())}, {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

}  // namespace rydchain
