#include "rydchain/census.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>

#include "rydchain/error.hpp"

namespace rydchain {

bool BlockadeGraph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

int BlockadeGraph::bandwidth() const {
  int w = 0;
  for (const auto& [i, j] : edges) w = std::max(w, j - i);
  return w;
}

BlockadeGraph blockade_graph(const ChainGeometry& geom, double r_b_um) {
  if (!(r_b_um > 0.0)) throw Error(ErrorKind::kInvalidParameter, "blockade radius must be positive");
  BlockadeGraph g{geom.N, {}};
  for (int i = 0; i < geom.N; ++i)
    for (int j = i + 1; j < geom.N; ++j)
      if (geom.pair_distance(i, j) < r_b_um) g.edges.emplace_back(i, j);
  return g;
}

std::uint64_t site_mask(int N, int site) { return std::uint64_t{1} << (N - 1 - site); }

std::string config_to_string(std::uint64_t config, int N) {
  std::string s(N, '0');
  for (int i = 0; i < N; ++i)
    if (config & site_mask(N, i)) s[i] = '1';
  return s;
}

namespace {

// Depth-first over sites in order, trying 0 before 1, which yields the
// configurations in ascending basis-index order.
void enumerate(int site, std::uint64_t config, int ups, const std::vector<std::uint64_t>& earlier_neighbors,
               int N, BlockadeCensus& out) {
  if (site == N) {
    out.configs.push_back(config);
    if (ups >= static_cast<int>(out.nu.size())) out.nu.resize(ups + 1, 0);
    ++out.nu[ups];
    return;
  }
  enumerate(site + 1, config, ups, earlier_neighbors, N, out);
  if ((config & earlier_neighbors[site]) == 0)
    enumerate(site + 1, config | site_mask(N, site), ups + 1, earlier_neighbors, N, out);
}

}  // namespace

BlockadeCensus enumerate_census(const BlockadeGraph& graph, int max_sites) {
  const int N = graph.N;
  if (N > max_sites || N > 63) {
    throw Error(ErrorKind::kSizeCapExceeded, "N = " + std::to_string(N) + " exceeds enumeration cap " +
                                                 std::to_string(std::min(max_sites, 63)));
  }
  std::vector<std::uint64_t> earlier(N, 0);
  for (const auto& [i, j] : graph.edges) earlier[j] |= site_mask(N, i);

  BlockadeCensus out;
  out.N = N;
  out.nu.assign(1, 0);
  enumerate(0, 0, 0, earlier, N, out);
  out.D = out.configs.size();
  out.n_max = static_cast<int>(out.nu.size()) - 1;
  return out;
}

namespace {

void add_checked(std::uint64_t& slot, std::uint64_t c) {
  if (slot > std::numeric_limits<std::uint64_t>::max() - c)
    throw Error(ErrorKind::kSizeCapExceeded, "census count overflows 64 bits");
  slot += c;
}

}  // namespace

CensusCounts count_only(const BlockadeGraph& graph) {
  const int N = graph.N;
  const int w = graph.bandwidth();
  if (w > kMaxCountBandwidth) {
    throw Error(ErrorKind::kUnsupportedGraph, "graph bandwidth " + std::to_string(w) + " exceeds " +
                                                  std::to_string(kMaxCountBandwidth));
  }
  // Window state: bit k set <=> site (current - 1 - k) is up.
  const std::size_t states = std::size_t{1} << w;
  // counts[state][n]
  std::vector<std::vector<std::uint64_t>> counts(states, std::vector<std::uint64_t>(N + 1, 0));
  counts[0][0] = 1;
  for (int site = 0; site < N; ++site) {
    std::uint64_t blocked = 0;  // window bits that conflict with exciting `site`
    for (int k = 0; k < w; ++k)
      if (site - 1 - k >= 0 && graph.has_edge(site - 1 - k, site)) blocked |= std::uint64_t{1} << k;
    const std::uint64_t keep = w == 0 ? 0 : (std::uint64_t{1} << w) - 1;
    std::vector<std::vector<std::uint64_t>> next(states, std::vector<std::uint64_t>(N + 1, 0));
    for (std::size_t s = 0; s < states; ++s) {
      for (int n = 0; n <= site; ++n) {
        const std::uint64_t c = counts[s][n];
        if (c == 0) continue;
        add_checked(next[(s << 1) & keep][n], c);
        if ((s & blocked) == 0) add_checked(next[((s << 1) | 1) & keep][n + 1], c);
      }
    }
    counts = std::move(next);
  }
  CensusCounts out;
  out.nu.assign(N + 1, 0);
  for (const auto& row : counts)
    for (int n = 0; n <= N; ++n) out.nu[n] += row[n];
  while (out.nu.size() > 1 && out.nu.back() == 0) out.nu.pop_back();
  for (auto v : out.nu) out.D += v;
  return out;
}

nlohmann::json to_json(const BlockadeCensus& census, double theta_deg, bool include_configs) {
  nlohmann::json j{{"N", census.N}, {"theta_deg", theta_deg}, {"nu", census.nu}, {"D", census.D},
                   {"n_max", census.n_max}};
  if (include_configs) {
    nlohmann::json cfg = nlohmann::json::array();
    for (auto c : census.configs) cfg.push_back(config_to_string(c, census.N));
    j["configs"] = std::move(cfg);
  }
  return j;
}

}  // namespace rydchain
