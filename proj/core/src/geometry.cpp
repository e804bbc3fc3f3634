#include "rydchain/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "rydchain/error.hpp"
#include "rydchain/units.hpp"

namespace rydchain {

namespace {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

void check_theta(double theta_deg) {
  if (!(theta_deg > 0.0 && theta_deg <= 180.0)) {
    throw Error(ErrorKind::kInvalidParameter, "theta must lie in (0, 180] degrees");
  }
}

}  // namespace

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

ChainGeometry build_chain(int N, double d_um, double theta_deg) {
  if (N < 1) throw Error(ErrorKind::kInvalidParameter, "atom count must be >= 1");
  if (!(d_um > 0.0)) throw Error(ErrorKind::kInvalidParameter, "spacing must be positive");
  check_theta(theta_deg);

  ChainGeometry g{N, d_um, theta_deg, {}};
  g.positions.reserve(N);
  const double half = deg_to_rad(theta_deg) / 2.0;
  const double dx = d_um * std::sin(half);
  // cos(pi/2) is not exactly zero in floating point.
  const double dy = theta_deg == 180.0 ? 0.0 : d_um * std::cos(half);
  Point2 p{};
  for (int i = 0; i < N; ++i) {
    g.positions.push_back(p);
    p.x += dx;
    p.y += (i % 2 == 0) ? dy : -dy;
  }
  return g;
}

ChainGeometry jitter_positions(const ChainGeometry& geom, double sigma_um, std::mt19937_64& rng) {
  if (sigma_um < 0.0) throw Error(ErrorKind::kInvalidParameter, "jitter sigma must be >= 0");
  ChainGeometry out = geom;
  if (sigma_um == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma_um);
  for (auto& p : out.positions) {
    p.x += noise(rng);
    p.y += noise(rng);
  }
  return out;
}

nlohmann::json to_json(const ChainGeometry& geom) {
  nlohmann::json pos = nlohmann::json::array();
  for (const auto& p : geom.positions) pos.push_back({p.x, p.y});
  return {{"N", geom.N}, {"d_um", geom.d_um}, {"theta_deg", geom.theta_deg}, {"positions", pos}};
}

InteractionMatrix InteractionMatrix::truncated(int max_range) const {
  InteractionMatrix out = *this;
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(i - j) > max_range) out.V(i, j) = 0.0;
  return out;
}

InteractionMatrix interaction_matrix(const ChainGeometry& geom, double c6_ghz_um6) {
  if (!(std::abs(c6_ghz_um6) > 0.0)) throw Error(ErrorKind::kInvalidParameter, "C6 magnitude must be positive");
  const int n = geom.N;
  const double c6 = units::c6_ghz_to_mhz(std::abs(c6_ghz_um6));
  InteractionMatrix out{Eigen::MatrixXd::Zero(n, n), std::abs(c6_ghz_um6)};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = geom.pair_distance(i, j);
      if (r == 0.0) throw Error(ErrorKind::kCoincidentAtoms, "atoms " + std::to_string(i) + " and " + std::to_string(j));
      const double v = units::kTwoPi * c6 / std::pow(r, 6);
      out.V(i, j) = v;
      out.V(j, i) = v;
    }
  }
  return out;
}

InteractionMatrix rescale_to_v12(const InteractionMatrix& V, double v12_mhz) {
  if (!(v12_mhz > 0.0)) throw Error(ErrorKind::kInvalidParameter, "V12 override must be positive");
  InteractionMatrix out = V;
  if (V.size() < 2) return out;
  out.V *= units::mhz_to_angular(v12_mhz) / V.V(0, 1);
  return out;
}

double blockade_radius(double c6_ghz_um6, double omega) {
  if (!(omega > 0.0)) throw Error(ErrorKind::kInvalidParameter, "Rabi frequency must be positive");
  return std::pow(units::c6_ghz_to_mhz(std::abs(c6_ghz_um6)) / omega, 1.0 / 6.0);
}

double effective_density(double theta_deg, double d_um) {
  check_theta(theta_deg);
  if (!(d_um > 0.0)) throw Error(ErrorKind::kInvalidParameter, "spacing must be positive");
  const double half = deg_to_rad(theta_deg) / 2.0;
  const double n_par = 1.0 / (d_um * std::sin(half));
  if (theta_deg == 180.0) return n_par;
  const double n_perp = 1.0 / (d_um * std::cos(half));
  return n_par / 2.0 + std::min(n_par / 2.0, n_perp);
}

}  // namespace rydchain
