#include "rydchain/mps.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rydchain/error.hpp"

namespace rydchain {

namespace {

using Mat = Eigen::MatrixXcd;

// Singular values below this fraction of the largest are treated as exact zeros.
constexpr double kSvdFloor = 1e-14;

Mat unit() { return Mat::Ones(1, 1); }

// L <- sum_s w_s bra[s]^dagger L ket[s]
Mat grow_left(const Mat& L, const std::array<Mat, 2>& bra, const std::array<Mat, 2>& ket, cplx w0 = 1.0, cplx w1 = 1.0) {
  return w0 * (bra[0].adjoint() * L * ket[0]) + w1 * (bra[1].adjoint() * L * ket[1]);
}

// R <- sum_s ket[s] R bra[s]^dagger
Mat grow_right(const Mat& R, const std::array<Mat, 2>& bra, const std::array<Mat, 2>& ket) {
  return ket[0] * R * bra[0].adjoint() + ket[1] * R * bra[1].adjoint();
}

struct Split {
  Mat U;
  Eigen::VectorXd S;
  Mat Vh;
  double discarded = 0.0;  // squared weight of dropped singular values
};

Split truncated_svd(const Mat& M, int chi_max) {
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Split out;
  if (s.size() == 0 || s[0] == 0.0) {
    out.U = Mat::Zero(M.rows(), 1);
    out.U(0, 0) = 1.0;
    out.S = Eigen::VectorXd::Zero(1);
    out.Vh = Mat::Zero(1, M.cols());
    out.Vh(0, 0) = 1.0;
    return out;
  }
  Eigen::Index keep = 0;
  while (keep < s.size() && keep < chi_max && s[keep] > kSvdFloor * s[0]) ++keep;
  for (Eigen::Index k = keep; k < s.size(); ++k)
    if (s[k] > kSvdFloor * s[0]) out.discarded += s[k] * s[k];
  out.U = svd.matrixU().leftCols(keep);
  out.S = s.head(keep);
  out.Vh = svd.matrixV().leftCols(keep).adjoint();
  return out;
}

// Left-canonicalize by QR from the left; the norm ends up on the last site.
void left_canonicalize(MatrixProductState& psi) {
  for (int i = 0; i + 1 < psi.sites(); ++i) {
    auto& A = psi.site[i];
    const Eigen::Index l = A[0].rows(), r = A[0].cols();
    Mat M(2 * l, r);
    M << A[0], A[1];
    Eigen::HouseholderQR<Mat> qr(M);
    const Eigen::Index k = std::min(2 * l, r);
    const Mat Q = qr.householderQ() * Mat::Identity(2 * l, k);
    const Mat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    A[0] = Q.topRows(l);
    A[1] = Q.bottomRows(l);
    for (auto& B : psi.site[i + 1]) B = (R * B).eval();
  }
}

}  // namespace

std::vector<int> MatrixProductState::bond_dims() const {
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < site.size(); ++i) out.push_back(static_cast<int>(site[i][0].cols()));
  return out;
}

int MatrixProductState::max_bond() const {
  const auto dims = bond_dims();
  return dims.empty() ? 1 : *std::max_element(dims.begin(), dims.end());
}

MatrixProductState MatrixProductState::product(int N, std::uint64_t ups) {
  if (N < 1) throw Error(ErrorKind::kInvalidParameter, "MPS needs at least one site");
  MatrixProductState psi;
  psi.site.resize(N);
  for (int i = 0; i < N; ++i) {
    const bool up = (ups >> (N - 1 - i)) & 1U;
    psi.site[i][0] = Mat::Constant(1, 1, up ? 0.0 : 1.0);
    psi.site[i][1] = Mat::Constant(1, 1, up ? 1.0 : 0.0);
  }
  return psi;
}

cplx overlap(const MatrixProductState& bra, const MatrixProductState& ket) {
  if (bra.sites() != ket.sites()) throw Error(ErrorKind::kLengthMismatch, "MPS site counts differ");
  Mat L = unit();
  for (int i = 0; i < ket.sites(); ++i) L = grow_left(L, bra.site[i], ket.site[i]);
  return L(0, 0);
}

double norm(const MatrixProductState& psi) { return std::sqrt(std::max(0.0, overlap(psi, psi).real())); }

void scale(MatrixProductState& psi, cplx factor) {
  for (auto& A : psi.site.front()) A *= factor;
}

Eigen::VectorXcd to_dense(const MatrixProductState& psi) {
  const int N = psi.sites();
  if (N > kMaxMatrixFreeSites) throw Error(ErrorKind::kDimensionOverflow, "dense MPS expansion too large");
  // Rows index the prefix configuration (earlier sites more significant).
  Mat acc = unit();
  for (int i = 0; i < N; ++i) {
    Mat next(acc.rows() * 2, psi.site[i][0].cols());
    for (Eigen::Index p = 0; p < acc.rows(); ++p) {
      next.row(2 * p) = acc.row(p) * psi.site[i][0];
      next.row(2 * p + 1) = acc.row(p) * psi.site[i][1];
    }
    acc = std::move(next);
  }
  return acc.col(0);
}

Eigen::VectorXd site_occupations(const MatrixProductState& psi) {
  const int N = psi.sites();
  std::vector<Mat> left(N + 1), right(N + 1);
  left[0] = unit();
  for (int i = 0; i < N; ++i) left[i + 1] = grow_left(left[i], psi.site[i], psi.site[i]);
  right[N] = unit();
  for (int i = N - 1; i >= 0; --i) right[i] = grow_right(right[i + 1], psi.site[i], psi.site[i]);
  const double nrm = left[N](0, 0).real();
  Eigen::VectorXd n(N);
  for (int i = 0; i < N; ++i) {
    const Mat Li = psi.site[i][1].adjoint() * left[i] * psi.site[i][1];
    n[i] = (Li.transpose().cwiseProduct(right[i + 1])).sum().real() / nrm;
  }
  return n;
}

MatrixProductOperator MatrixProductOperator::identity(int N) {
  MatrixProductOperator op;
  op.W.resize(N);
  for (auto& w : op.W) {
    w[0][0] = w[1][1] = Mat::Ones(1, 1);
    w[0][1] = w[1][0] = Mat::Zero(1, 1);
  }
  return op;
}

MatrixProductState apply(const MatrixProductOperator& op, const MatrixProductState& psi) {
  if (op.sites() != psi.sites()) throw Error(ErrorKind::kLengthMismatch, "MPO and MPS site counts differ");
  MatrixProductState out;
  out.site.resize(psi.sites());
  for (int i = 0; i < psi.sites(); ++i) {
    for (int s = 0; s < 2; ++s) {
      Mat acc = Eigen::kroneckerProduct(op.W[i][s][0], psi.site[i][0]);
      if (!op.W[i][s][1].isZero(0.0)) acc += Eigen::kroneckerProduct(op.W[i][s][1], psi.site[i][1]);
      out.site[i][s] = std::move(acc);
    }
  }
  return out;
}

TrotterFactors trotter_step_mpo(const SpinSystem& sys, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::kInvalidDt, "Trotter step must be positive");
  validate(sys);
  const int N = sys.N();
  TrotterFactors f;
  const double c = std::cos(sys.omega * dt / 4.0), s = std::sin(sys.omega * dt / 4.0);
  f.half_x << c, cplx(0, -s), cplx(0, -s), c;

  // Bond state (n_{i-1}, n_i) encoded as 2 n_{i-1} + n_i.
  f.z.W.resize(N);
  for (int i = 0; i < N; ++i) {
    const Eigen::Index left = (i == 0) ? 1 : 4, right = (i == N - 1) ? 1 : 4;
    const double v1 = (i >= 1) ? sys.V.V(i - 1, i) : 0.0;
    const double v2 = (i >= 2) ? sys.V.V(i - 2, i) : 0.0;
    auto& w = f.z.W[i];
    for (int so = 0; so < 2; ++so)
      for (int si = 0; si < 2; ++si) w[so][si] = Mat::Zero(left, right);
    for (Eigen::Index l = 0; l < left; ++l) {
      const int a = static_cast<int>(l >> 1), b = static_cast<int>(l & 1);
      for (int sv = 0; sv < 2; ++sv) {
        const double energy = v1 * b * sv + v2 * a * sv - 0.5 * sys.delta * (2 * sv - 1);
        const Eigen::Index r = (right == 1) ? 0 : 2 * b + sv;
        w[sv][sv](l, r) = std::polar(1.0, -energy * dt);
      }
    }
  }
  return f;
}

void apply_single_site(MatrixProductState& psi, const Eigen::Matrix2cd& u) {
  for (auto& A : psi.site) {
    Mat a0 = u(0, 0) * A[0] + u(0, 1) * A[1];
    Mat a1 = u(1, 0) * A[0] + u(1, 1) * A[1];
    A[0] = std::move(a0);
    A[1] = std::move(a1);
  }
}

CompressionResult variational_compress(const MatrixProductState& psi, int chi_max, double tol, int max_sweeps) {
  if (chi_max < 1) throw Error(ErrorKind::kInvalidParameter, "chi_max must be >= 1");
  const int N = psi.sites();
  const double in_norm = norm(psi);
  CompressionResult res;
  res.psi = psi;
  if (N == 1 || in_norm == 0.0) return res;

  // Truncated-SVD guess: left-canonical, then truncate sweeping right to left.
  MatrixProductState& phi = res.psi;
  left_canonicalize(phi);
  double discarded = 0.0;
  for (int i = N - 1; i >= 1; --i) {
    auto& A = phi.site[i];
    Mat M(A[0].rows(), 2 * A[0].cols());
    M << A[0], A[1];
    const Split sp = truncated_svd(M, chi_max);
    discarded += sp.discarded;
    const Eigen::Index r = A[0].cols();
    A[0] = sp.Vh.leftCols(r);
    A[1] = sp.Vh.rightCols(r);
    const Mat US = sp.U * sp.S.asDiagonal();
    for (auto& B : phi.site[i - 1]) B = (B * US).eval();
  }
  auto fidelity_of = [&](const MatrixProductState& cand) {
    const double n = norm(cand);
    return n == 0.0 ? 0.0 : std::abs(overlap(cand, psi)) / (n * in_norm);
  };
  res.fidelity = fidelity_of(phi);
  if (discarded == 0.0) return res;

  // Two-site sweeps. phi is right-canonical on sites 1..N-1 here.
  std::vector<Mat> L(N + 1), R(N + 1);
  L[0] = unit();
  R[N] = unit();
  for (int i = N - 1; i >= 1; --i) R[i] = grow_right(R[i + 1], phi.site[i], psi.site[i]);

  auto theta = [&](int j) {
    const Eigen::Index l = L[j].rows(), r = R[j + 2].cols();
    Mat M(2 * l, 2 * r);
    for (int s1 = 0; s1 < 2; ++s1) {
      const Mat left = L[j] * psi.site[j][s1];
      for (int s2 = 0; s2 < 2; ++s2) M.block(s1 * l, s2 * r, l, r) = left * psi.site[j + 1][s2] * R[j + 2];
    }
    return M;
  };

  double previous = res.fidelity;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double last_weight = 0.0;
    for (int j = 0; j + 1 < N; ++j) {
      const Mat M = theta(j);
      const Split sp = truncated_svd(M, chi_max);
      const Eigen::Index l = M.rows() / 2, r = M.cols() / 2;
      phi.site[j][0] = sp.U.topRows(l);
      phi.site[j][1] = sp.U.bottomRows(l);
      const Mat SV = sp.S.asDiagonal() * sp.Vh;
      phi.site[j + 1][0] = SV.leftCols(r);
      phi.site[j + 1][1] = SV.rightCols(r);
      L[j + 1] = grow_left(L[j], phi.site[j], psi.site[j]);
      last_weight = sp.S.norm();
    }
    for (int j = N - 2; j >= 0; --j) {
      const Mat M = theta(j);
      const Split sp = truncated_svd(M, chi_max);
      const Eigen::Index l = M.rows() / 2, r = M.cols() / 2;
      phi.site[j + 1][0] = sp.Vh.leftCols(r);
      phi.site[j + 1][1] = sp.Vh.rightCols(r);
      const Mat US = sp.U * sp.S.asDiagonal();
      phi.site[j][0] = US.topRows(l);
      phi.site[j][1] = US.bottomRows(l);
      R[j + 1] = grow_right(R[j + 2], phi.site[j + 1], psi.site[j + 1]);
      last_weight = sp.S.norm();
    }
    // phi's centre is the projection of the exact two-site tensor, so
    // <phi|psi> = ||phi||^2 and the fidelity is ||phi|| / ||psi||.
    const double f = std::min(1.0, last_weight / in_norm);
    res.fidelity = f;
    res.sweeps = sweep;
    if (std::abs(f - previous) < tol) return res;
    previous = f;
  }
  throw Error(ErrorKind::kNoConvergence, "variational compression did not converge in " + std::to_string(max_sweeps) +
                                             " sweeps");
}

Eigen::VectorXd number_distribution_mps(const MatrixProductState& psi) {
  const int N = psi.sites();
  const int K = N + 1;
  std::vector<cplx> G(K);
  for (int k = 0; k < K; ++k) {
    const cplx w = std::polar(1.0, 2.0 * std::numbers::pi * k / K);
    Mat L = unit();
    for (int i = 0; i < N; ++i) L = grow_left(L, psi.site[i], psi.site[i], 1.0, w);
    G[k] = L(0, 0);
  }
  const double nrm = G[0].real();
  Eigen::VectorXd P(K);
  for (int n = 0; n < K; ++n) {
    cplx acc = 0.0;
    for (int k = 0; k < K; ++k) acc += G[k] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / K);
    P[n] = std::clamp(acc.real() / (K * nrm), 0.0, 1.0);
  }
  return P;
}

double tebd_step(double omega, const TebdOptions& options) {
  if (!(options.dt_out > 0.0)) throw Error(ErrorKind::kInvalidDt, "dt_out must be positive");
  if (!(options.omega_dt > 0.0)) throw Error(ErrorKind::kInvalidDt, "Omega dt bound must be positive");
  if (omega <= 0.0) return options.dt_out;
  const double substeps = std::max(1.0, std::ceil(options.dt_out * omega / options.omega_dt - 1e-9));
  return options.dt_out / substeps;
}

ObservableTrace tebd_evolve(const SpinSystem& sys, const TebdOptions& options) {
  validate(sys);
  const int N = sys.N();
  const std::vector<double> times = output_grid(options.t_max, options.dt_out);
  const double dt = tebd_step(sys.omega, options);
  const long substeps = std::lround(options.dt_out / dt);
  const TrotterFactors f = trotter_step_mpo(sys, dt);

  ObservableTrace trace;
  trace.atoms = N;
  trace.times = times;
  trace.P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), N + 1);
  MatrixProductState psi = MatrixProductState::product(N);
  auto record = [&](std::size_t k) {
    const Eigen::VectorXd P = number_distribution_mps(psi);
    trace.P.row(static_cast<Eigen::Index>(k)) = P.transpose();
    auto& d = trace.diagnostics;
    d.max_probability_error = std::max(d.max_probability_error, std::abs(P.sum() - 1.0));
  };
  record(0);
  long step = 0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    for (long sub = 0; sub < substeps; ++sub) {
      apply_single_site(psi, f.half_x);
      psi = apply(f.z, psi);
      apply_single_site(psi, f.half_x);
      CompressionResult c = variational_compress(psi, options.chi_max, options.tol, options.max_sweeps);
      if (1.0 - c.fidelity > options.max_infidelity)
        throw Error(ErrorKind::kTruncationOverflow,
                    "compression fidelity " + std::to_string(c.fidelity) + " at chi_max " + std::to_string(options.chi_max));
      psi = std::move(c.psi);
      const double n = norm(psi);
      trace.diagnostics.max_norm_deviation = std::max(trace.diagnostics.max_norm_deviation, std::abs(n - 1.0));
      scale(psi, 1.0 / n);
      ++step;
      if (options.on_step) options.on_step(step, step * dt, psi.bond_dims());
    }
    record(k);
  }
  derive_moments(trace);
  return trace;
}

}  // namespace rydchain
