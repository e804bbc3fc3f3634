#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <nlohmann/json.hpp>

#include "rydchain/error.hpp"
#include "rydchain/geometry.hpp"
#include "rydchain/units.hpp"

namespace rydchain {
using namespace units;
namespace {

double interior_angle_deg(const Point2& a, const Point2& b, const Point2& c) {
  const double ux = a.x - b.x, uy = a.y - b.y, vx = c.x - b.x, vy = c.y - b.y;
  const double cosang = (ux * vx + uy * vy) / (std::hypot(ux, uy) * std::hypot(vx, vy));
  return std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

TEST(BuildChain, StraightChainIsCollinear) {
  const ChainGeometry g = build_chain(3, 4.0, 180.0);
  ASSERT_EQ(g.positions.size(), 3u);
  EXPECT_DOUBLE_EQ(g.positions[0].x, 0.0);
  EXPECT_DOUBLE_EQ(g.positions[1].x, 4.0);
  EXPECT_DOUBLE_EQ(g.positions[2].x, 8.0);
  for (const auto& p : g.positions) EXPECT_EQ(p.y, 0.0);
}

TEST(BuildChain, SixtyDegreeNextNeighborEqualsSpacing) {
  const ChainGeometry g = build_chain(3, 4.0, 60.0);
  EXPECT_NEAR(g.pair_distance(0, 2), 4.0, 1e-12);
}

class ChainInvariants : public ::testing::TestWithParam<double> {};

TEST_P(ChainInvariants, BondsAnglesAndSecondNeighbors) {
  const double theta = GetParam();
  const ChainGeometry g = build_chain(25, 4.0, theta);
  for (int i = 0; i + 1 < g.N; ++i) EXPECT_NEAR(g.pair_distance(i, i + 1), 4.0, 4e-12);
  for (int i = 1; i + 1 < g.N; ++i)
    EXPECT_NEAR(interior_angle_deg(g.positions[i - 1], g.positions[i], g.positions[i + 1]), theta, 1e-9);
  const double expected = 2.0 * 4.0 * std::sin(theta * std::numbers::pi / 360.0);
  for (int i = 0; i + 2 < g.N; ++i) EXPECT_NEAR(g.pair_distance(i, i + 2), expected, 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Angles, ChainInvariants, ::testing::Values(30.0, 45.0, 60.0, 90.0, 120.0, 150.0, 180.0));

TEST(BuildChain, RejectsInvalidParameters) {
  EXPECT_THROW(build_chain(0, 4.0, 60.0), Error);
  EXPECT_THROW(build_chain(3, 0.0, 60.0), Error);
  EXPECT_THROW(build_chain(3, 4.0, 0.0), Error);
  EXPECT_THROW(build_chain(3, 4.0, 180.5), Error);
  try {
    build_chain(3, -1.0, 60.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidParameter);
  }
}

TEST(InteractionMatrix, RatioOfSecondToFirstNeighbor) {
  for (double theta = 45.0; theta <= 180.0; theta += 5.0) {
    const InteractionMatrix V = interaction_matrix(build_chain(4, 4.0, theta), 470.0);
    const double expected = std::pow(2.0 * std::sin(theta * std::numbers::pi / 360.0), -6.0);
    EXPECT_NEAR(V.V(0, 2) / V.V(0, 1), expected, 1e-12 * expected) << theta;
  }
  const InteractionMatrix lin = interaction_matrix(build_chain(3, 4.0, 180.0), 470.0);
  EXPECT_NEAR(lin.V(0, 2) / lin.V(0, 1), 1.0 / 64.0, 1e-15);
  const InteractionMatrix zig = interaction_matrix(build_chain(3, 4.0, 60.0), 470.0);
  EXPECT_NEAR(zig.V(0, 2), zig.V(0, 1), 1e-9);
}

TEST(InteractionMatrix, NearestNeighborMagnitude) {
  const InteractionMatrix V = interaction_matrix(build_chain(2, 4.0, 180.0), -470.0);
  EXPECT_NEAR(angular_to_mhz(V.V(0, 1)), 470000.0 / 4096.0, 1e-9);
}

TEST(InteractionMatrix, SymmetricRepulsiveMonotone) {
  const ChainGeometry g = build_chain(8, 4.0, 75.0);
  const InteractionMatrix V = interaction_matrix(g, 470.0);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(V.V(i, i), 0.0);
    for (int j = 0; j < 8; ++j) {
      EXPECT_EQ(V.V(i, j), V.V(j, i));
      EXPECT_GE(V.V(i, j), 0.0);
    }
  }
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b)
      for (int c = 0; c < 8; ++c)
        for (int e = c + 1; e < 8; ++e)
          if (g.pair_distance(a, b) < g.pair_distance(c, e) - 1e-9) EXPECT_GT(V.V(a, b), V.V(c, e));
}

TEST(InteractionMatrix, CoincidentAtomsRejected) {
  ChainGeometry g = build_chain(3, 4.0, 180.0);
  g.positions[2] = g.positions[0];
  try {
    interaction_matrix(g, 470.0);
    FAIL() << "expected coincident-atoms";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCoincidentAtoms);
  }
}

TEST(InteractionMatrix, RescaleAndTruncate) {
  const InteractionMatrix V = rescale_to_v12(interaction_matrix(build_chain(5, 4.0, 60.0), 470.0), 20.0);
  EXPECT_NEAR(V.V(0, 1), mhz_to_angular(20.0), 1e-12);
  EXPECT_NEAR(V.V(0, 2), V.V(0, 1), 1e-9);
  const InteractionMatrix T = V.truncated(2);
  EXPECT_EQ(T.V(0, 3), 0.0);
  EXPECT_EQ(T.V(0, 2), V.V(0, 2));
}

TEST(BlockadeRadius, ReferenceValueAndScaling) {
  EXPECT_NEAR(blockade_radius(470.0, mhz_to_angular(1.0)), 6.5, 0.05);
  const double r = blockade_radius(470.0, 1.7);
  EXPECT_NEAR(blockade_radius(470.0, 64 * 1.7), r / 2.0, 1e-12);
  EXPECT_LT(blockade_radius(1e-30, 1.0), 1e-3);
  EXPECT_THROW(blockade_radius(470.0, 0.0), Error);
  EXPECT_GT(blockade_radius(500.0, 1.0), blockade_radius(470.0, 1.0));
  EXPECT_LT(blockade_radius(470.0, 2.0), blockade_radius(470.0, 1.0));
}

TEST(EffectiveDensity, Limits) {
  EXPECT_NEAR(effective_density(180.0, 4.0), 0.25, 1e-15);
  EXPECT_NEAR(effective_density(60.0, 4.0), 0.5, 1e-12);
  const double tiny = 1e-4;
  const double n_par = 1.0 / (4.0 * std::sin(tiny * std::numbers::pi / 360.0));
  EXPECT_NEAR(effective_density(tiny, 4.0) / n_par, 0.5, 1e-6);
}

TEST(EffectiveDensity, ContinuousInTheta) {
  double prev = effective_density(1.0, 4.0);
  for (double theta = 1.01; theta <= 180.0; theta += 0.01) {
    const double cur = effective_density(theta, 4.0);
    EXPECT_LT(std::abs(cur - prev) / prev, 0.02) << theta;
    prev = cur;
  }
  EXPECT_NEAR(effective_density(179.9999, 4.0), effective_density(180.0, 4.0), 1e-5);
}

TEST(GeometryJson, ExportShape) {
  const nlohmann::json j = to_json(build_chain(3, 4.0, 180.0));
  EXPECT_EQ(j.at("N"), 3);
  EXPECT_EQ(j.at("positions").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("positions")[2][0].get<double>(), 8.0);
}

TEST(Jitter, ZeroSigmaIsIdentity) {
  std::mt19937_64 rng(7);
  const ChainGeometry g = build_chain(5, 4.0, 60.0);
  const ChainGeometry h = jitter_positions(g, 0.0, rng);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(g.positions[i].x, h.positions[i].x);
}

}  // namespace
}  // namespace rydchain
