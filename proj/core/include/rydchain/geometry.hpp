#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <random>
#include <vector>

namespace rydchain {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

/// Planar zigzag chain: first atom at the origin, propagation along +x, the
/// transverse step alternating +y / -y. theta is the interior angle at every
/// internal vertex, so theta = 180 degrees is a straight line.
struct ChainGeometry {
  int N = 0;
  double d_um = 0.0;
  double theta_deg = 180.0;
  std::vector<Point2> positions;

  double pair_distance(int i, int j) const { return distance(positions[i], positions[j]); }
};

ChainGeometry build_chain(int N, double d_um, double theta_deg);

/// Gaussian per-shot positional disorder. sigma = 0 returns the input unchanged.
ChainGeometry jitter_positions(const ChainGeometry& geom, double sigma_um, std::mt19937_64& rng);

nlohmann::json to_json(const ChainGeometry& geom);

/// Pair energies in rad/us, symmetric with zero diagonal.
struct InteractionMatrix {
  Eigen::MatrixXd V;
  double c6_ghz_um6 = 0.0;

  int size() const { return static_cast<int>(V.rows()); }
  /// Copy keeping only couplings with |i - j| <= max_range.
  InteractionMatrix truncated(int max_range) const;
};

/// V_ij = 2 pi |C6| / r_ij^6 with C6 in GHz um^6, converted to rad/us.
InteractionMatrix interaction_matrix(const ChainGeometry& geom, double c6_ghz_um6);

/// Uniformly rescale so that V(0,1) equals 2 pi * v12_mhz. A no-op for N < 2.
InteractionMatrix rescale_to_v12(const InteractionMatrix& V, double v12_mhz);

/// Distance at which the pair interaction matches the drive scale,
/// r_B = (|C6| / Omega)^(1/6) with C6 in MHz um^6 and Omega in rad/us.
/// Gives 6.5 um at Omega / 2pi = 1 MHz and |C6| = 470 GHz um^6.
double blockade_radius(double c6_ghz_um6, double omega);

/// One-dimensional atom density interpolating between the straight chain
/// (1/d) and the folded limit (half the projected density).
double effective_density(double theta_deg, double d_um);

}  // namespace rydchain
