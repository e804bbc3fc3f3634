#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rydchain/geometry.hpp"

namespace rydchain {

/// Pairs of atoms that cannot both be excited. Edges are stored with i < j,
/// sorted and duplicate-free.
struct BlockadeGraph {
  int N = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int i, int j) const;
  /// Largest |i - j| over all edges (0 for an empty graph).
  int bandwidth() const;
};

BlockadeGraph blockade_graph(const ChainGeometry& geom, double r_b_um);

/// Basis index convention shared with the Hamiltonian: site 0 is the most
/// significant of the N bits, bit value 1 means spin up (Rydberg).
std::uint64_t site_mask(int N, int site);
std::string config_to_string(std::uint64_t config, int N);

struct BlockadeCensus {
  int N = 0;
  std::vector<std::uint64_t> configs;  // ascending = lexicographic on bitstrings
  std::vector<std::uint64_t> nu;       // nu[n] for n = 0..n_max
  std::uint64_t D = 0;
  int n_max = 0;
};

inline constexpr int kDefaultCensusCap = 25;

BlockadeCensus enumerate_census(const BlockadeGraph& graph, int max_sites = kDefaultCensusCap);

struct CensusCounts {
  std::vector<std::uint64_t> nu;
  std::uint64_t D = 0;
};

/// Transfer-matrix count over a sliding window of the last `bandwidth` sites.
/// Works for any graph whose edges only join sites at most kMaxCountBandwidth
/// apart (paths, path squares and their subgraphs).
inline constexpr int kMaxCountBandwidth = 12;
CensusCounts count_only(const BlockadeGraph& graph);

nlohmann::json to_json(const BlockadeCensus& census, double theta_deg, bool include_configs);

}  // namespace rydchain
