#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/partition.hpp"
#include "ccd/random.hpp"

namespace ccd {

struct LfrConfig {
  std::size_t n = 10000;
  double tau1 = 2.5;  // degree exponent
  double tau2 = 1.5;  // community size exponent
  double mu = 0.1;    // fraction of inter-community edge ends per node
  double avg_degree = 5.0;
  double max_degree = 100.0;
  std::size_t min_community = 100;
  std::size_t max_community = 600;
  Seed seed = 1;
  int max_attempts = 20;
};

namespace detail {

// Inverse-CDF draw from density ~ x^-tau on [lo, hi].
inline double power_law_draw(Rng& rng, double lo, double hi, double tau) {
  const double u = uniform01(rng);
  const double e = 1.0 - tau;
  return std::pow(std::pow(lo, e) + u * (std::pow(hi, e) - std::pow(lo, e)), 1.0 / e);
}

inline double power_law_mean(double lo, double hi, double tau) {
  if (std::abs(tau - 2.0) < 1e-12) {
    return std::log(hi / lo) / (1.0 / lo - 1.0 / hi);
  }
  const double e1 = 1.0 - tau, e2 = 2.0 - tau;
  return (e1 / e2) * (std::pow(hi, e2) - std::pow(lo, e2)) / (std::pow(hi, e1) - std::pow(lo, e1));
}

inline std::uint64_t pair_key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Pairs up stubs at random, then repairs self-loops, duplicates and pairs
// that `allowed` rejects by double-edge swaps with random partners. `taken`
// holds edges that already exist and receives the new ones. Returns false if
// the swap budget runs out, leaving `taken` as it was.
template <class Allowed>
bool wire_stubs(std::vector<NodeId> stubs, Rng& rng, Allowed&& allowed,
                std::unordered_map<std::uint64_t, int>& taken, std::vector<Edge>& out) {
  if (stubs.size() % 2 != 0) throw GenerationError("odd stub count");
  shuffle(std::span(stubs), rng);
  const std::size_t m = stubs.size() / 2;
  if (m == 0) return true;
  std::vector<std::pair<NodeId, NodeId>> edges(m);
  for (std::size_t i = 0; i < m; ++i) edges[i] = {stubs[2 * i], stubs[2 * i + 1]};

  auto valid_new = [&](NodeId a, NodeId b) { return a != b && allowed(a, b) && !taken.contains(pair_key(a, b)); };
  auto add = [&](NodeId a, NodeId b) { ++taken[pair_key(a, b)]; };
  auto remove = [&](NodeId a, NodeId b) {
    auto it = taken.find(pair_key(a, b));
    if (--it->second == 0) taken.erase(it);
  };

  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < m; ++i) {
    auto [a, b] = edges[i];
    if (valid_new(a, b)) {
      add(a, b);
    } else {
      bad.push_back(i);
    }
  }
  // Bad edges are not in `taken`; good ones are.
  std::size_t budget = 100 * m;
  while (!bad.empty() && budget-- > 0) {
    const std::size_t slot = uniform_below(rng, bad.size());
    const std::size_t i = bad[slot];
    const std::size_t j = uniform_below(rng, m);
    if (j == i) continue;
    const bool j_bad = std::find(bad.begin(), bad.end(), j) != bad.end();
    auto [a, b] = edges[i];
    auto [c, d] = edges[j];
    if (uniform_below(rng, 2) == 1) std::swap(c, d);
    if (!j_bad) remove(c, d);
    const bool ok = valid_new(a, c) && pair_key(a, c) != pair_key(b, d) && valid_new(b, d);
    if (!ok) {
      if (!j_bad) add(c, d);
      continue;
    }
    add(a, c);
    add(b, d);
    edges[i] = {a, c};
    edges[j] = {b, d};
    bad.erase(bad.begin() + static_cast<std::ptrdiff_t>(slot));
    if (j_bad) std::erase(bad, j);
  }
  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::binary_search(bad.begin(), bad.end(), i)) remove(edges[i].first, edges[i].second);
    }
    return false;
  }
  for (auto [a, b] : edges) out.push_back({std::min(a, b), std::max(a, b), 1.0});
  return true;
}

// Simple graph on `nodes` with the given degrees: Havel-Hakimi, then
// 10 double-edge swaps per edge to randomize it. Returns false when the
// sequence is not graphical.
inline bool realize_degrees(const std::vector<NodeId>& nodes, const std::vector<std::size_t>& deg, Rng& rng,
                            std::unordered_map<std::uint64_t, int>& taken, std::vector<Edge>& out) {
  std::vector<std::pair<std::size_t, NodeId>> residual;
  for (std::size_t i = 0; i < nodes.size(); ++i) residual.push_back({deg[i], nodes[i]});
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::unordered_map<std::uint64_t, int> local;
  while (true) {
    std::sort(residual.begin(), residual.end(), std::greater<>());
    while (!residual.empty() && residual.back().first == 0) residual.pop_back();
    if (residual.empty()) break;
    auto [d, v] = residual.front();
    if (d >= residual.size()) return false;
    for (std::size_t i = 1; i <= d; ++i) {
      --residual[i].first;
      edges.push_back({v, residual[i].second});
      local[pair_key(v, residual[i].second)] = 1;
    }
    residual.front().first = 0;
  }
  const std::size_t m = edges.size();
  for (std::size_t step = 0; m >= 2 && step < 10 * m; ++step) {
    const std::size_t i = uniform_below(rng, m), j = uniform_below(rng, m);
    if (i == j) continue;
    auto [a, b] = edges[i];
    auto [c, d] = edges[j];
    if (uniform_below(rng, 2) == 1) std::swap(c, d);
    if (a == d || c == b || local.contains(pair_key(a, d)) || local.contains(pair_key(c, b))) continue;
    local.erase(pair_key(a, b));
    local.erase(pair_key(c, d));
    local[pair_key(a, d)] = 1;
    local[pair_key(c, b)] = 1;
    edges[i] = {a, d};
    edges[j] = {c, b};
  }
  for (auto [a, b] : edges) {
    ++taken[pair_key(a, b)];
    out.push_back({std::min(a, b), std::max(a, b), 1.0});
  }
  return true;
}

// Community sizes in [lo, hi] summing to n, or empty on failure.
inline std::vector<std::size_t> community_sizes(Rng& rng, const LfrConfig& cfg) {
  std::vector<std::size_t> sizes;
  std::size_t sum = 0;
  while (sum < cfg.n) {
    const double x = power_law_draw(rng, static_cast<double>(cfg.min_community),
                                    static_cast<double>(cfg.max_community) + 1.0, cfg.tau2);
    const auto s = std::clamp<std::size_t>(static_cast<std::size_t>(x), cfg.min_community, cfg.max_community);
    sizes.push_back(s);
    sum += s;
  }
  std::size_t excess = sum - cfg.n;
  // Shrink toward the lower bound first; failing that, drop the last
  // community and grow the rest toward the upper bound.
  std::size_t slack = 0;
  for (auto s : sizes) slack += s - cfg.min_community;
  if (slack >= excess) {
    for (std::size_t i = 0; excess > 0; i = (i + 1) % sizes.size()) {
      if (sizes[i] > cfg.min_community) --sizes[i], --excess;
    }
    return sizes;
  }
  sum -= sizes.back();
  sizes.pop_back();
  std::size_t deficit = cfg.n - sum;
  std::size_t room = 0;
  for (auto s : sizes) room += cfg.max_community - s;
  if (sizes.empty() || room < deficit) return {};
  for (std::size_t i = 0; deficit > 0; i = (i + 1) % sizes.size()) {
    if (sizes[i] < cfg.max_community) ++sizes[i], --deficit;
  }
  return sizes;
}

}  // namespace detail

inline void validate(const LfrConfig& cfg) {
  if (cfg.n < 2) throw ValidationError("lfr: n must be at least 2");
  if (!(cfg.tau1 > 1.0) || !(cfg.tau2 > 1.0)) throw ValidationError("lfr: exponents must exceed 1");
  if (!(cfg.mu >= 0.0 && cfg.mu < 1.0)) throw ValidationError("lfr: mu must lie in [0, 1)");
  if (!(cfg.avg_degree >= 1.0) || !(cfg.avg_degree <= cfg.max_degree)) {
    throw ValidationError("lfr: need 1 <= avg_degree <= max_degree");
  }
  if (cfg.min_community < 1 || cfg.min_community > cfg.max_community || cfg.max_community > cfg.n) {
    throw ValidationError("lfr: need 1 <= min_community <= max_community <= n");
  }
}

// Fraction of edges whose endpoints lie in different communities.
inline double realized_mixing(const Graph& g, const Partition& p) {
  if (p.size() != g.node_count() || !p.is_total()) throw ValidationError("partition must cover the graph");
  if (g.edge_count() == 0) throw DomainError("mixing is undefined for a graph without edges");
  std::size_t inter = 0;
  for (const Edge& e : g.edges()) inter += p[e.u] != p[e.v];
  return static_cast<double>(inter) / static_cast<double>(g.edge_count());
}

// Standard LFR construction: power-law degrees and community sizes, nodes
// placed into communities that can hold their intra-degree, intra-community
// edges built by Havel-Hakimi plus random swaps, inter-community stubs wired
// by configuration-model matching with swap repair. The inter-degree of a node of degree k is mu*k rounded up or down
// at random so that the expected mixing is exactly mu even for small k.
inline DatasetBundle generate_lfr(const LfrConfig& cfg) {
  validate(cfg);
  const double kmax = std::floor(cfg.max_degree);
  if (detail::power_law_mean(1.0, kmax, cfg.tau1) > cfg.avg_degree) {
    throw GenerationError("lfr: average degree too small for this exponent and maximum degree");
  }
  double lo = 1.0, hi = cfg.avg_degree;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (detail::power_law_mean(mid, kmax, cfg.tau1) < cfg.avg_degree ? lo : hi) = mid;
  }
  const double kmin = 0.5 * (lo + hi);

  Rng rng(derive_seed(cfg.seed, 0));
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const std::size_t n = cfg.n;
    std::vector<std::size_t> degree(n), outside(n), inside(n);
    std::size_t total = 0;
    for (auto& k : degree) {
      k = static_cast<std::size_t>(std::clamp(std::round(detail::power_law_draw(rng, kmin, kmax, cfg.tau1)), 1.0, kmax));
      total += k;
    }
    if (total % 2 != 0) {
      auto it = std::find_if(degree.begin(), degree.end(), [&](std::size_t k) { return k < kmax; });
      if (it == degree.end()) continue;
      ++*it;
    }
    for (std::size_t v = 0; v < n; ++v) {
      const double x = cfg.mu * static_cast<double>(degree[v]);
      outside[v] = static_cast<std::size_t>(std::floor(x)) + (uniform01(rng) < x - std::floor(x) ? 1 : 0);
      inside[v] = degree[v] - outside[v];
    }

    const auto sizes = detail::community_sizes(rng, cfg);
    if (sizes.empty()) continue;

    // Place nodes by decreasing intra-degree into random communities with
    // room that are large enough.
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return inside[a] > inside[b]; });
    std::vector<std::size_t> free(sizes);
    std::vector<Label> community(n, kUnassigned);
    bool placed = true;
    std::vector<std::size_t> options;
    for (NodeId v : order) {
      options.clear();
      for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (free[c] > 0 && sizes[c] > inside[v]) options.push_back(c);
      }
      if (options.empty()) {
        placed = false;
        break;
      }
      const std::size_t c = options[uniform_below(rng, options.size())];
      community[v] = static_cast<Label>(c);
      --free[c];
    }
    if (!placed) continue;

    // Each community needs an even number of intra stubs, and so does the
    // inter side: nudge one degree by one where a sum is odd.
    std::vector<std::vector<NodeId>> members(sizes.size());
    for (NodeId v = 0; v < n; ++v) members[community[v]].push_back(v);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      std::size_t sum = 0;
      for (NodeId v : members[c]) sum += inside[v];
      if (sum % 2 == 0) continue;
      const auto [lo_it, hi_it] = std::minmax_element(members[c].begin(), members[c].end(),
                                                      [&](NodeId a, NodeId b) { return inside[a] < inside[b]; });
      if (degree[*hi_it] > 1 && inside[*hi_it] > 0) {
        --inside[*hi_it], --degree[*hi_it];
      } else {
        ++inside[*lo_it], ++degree[*lo_it];
      }
    }
    std::size_t inter_total = 0;
    std::vector<std::size_t> inter(sizes.size(), 0);
    for (NodeId v = 0; v < n; ++v) inter_total += outside[v], inter[community[v]] += outside[v];
    if (inter_total % 2 != 0) {
      NodeId pick = 0;
      for (NodeId v = 0; v < n; ++v) {
        if (outside[v] > 0 && degree[v] > 1) pick = v;
      }
      if (outside[pick] > 0 && degree[pick] > 1) {
        --outside[pick], --degree[pick], --inter[community[pick]], --inter_total;
      } else {
        ++outside[pick], ++degree[pick], ++inter[community[pick]], ++inter_total;
      }
    }
    // No community may hold more than half of the inter stubs, or some of
    // them could only pair among themselves. With two communities this forces
    // equal sides. The surplus turns into intra stubs; it is even, so intra
    // parity survives.
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (2 * inter[c] <= inter_total) continue;
      std::size_t surplus = 2 * inter[c] - inter_total;
      for (std::size_t pass = 0; surplus > 0 && pass < 2 * n; ++pass) {
        bool moved = false;
        for (NodeId v : members[c]) {
          if (surplus == 0) break;
          if (outside[v] > 0 && inside[v] + 1 < sizes[c]) --outside[v], ++inside[v], --surplus, moved = true;
        }
        if (!moved) break;
      }
      if (surplus > 0) placed = false;
    }
    if (!placed) continue;

    std::unordered_map<std::uint64_t, int> taken;
    std::vector<Edge> edges;
    bool wired = true;
    for (std::size_t c = 0; c < sizes.size() && wired; ++c) {
      std::vector<std::size_t> deg;
      for (NodeId v : members[c]) deg.push_back(inside[v]);
      wired = detail::realize_degrees(members[c], deg, rng, taken, edges);
    }
    if (!wired) continue;
    std::vector<NodeId> stubs;
    for (NodeId v = 0; v < n; ++v) stubs.insert(stubs.end(), outside[v], v);
    wired = false;
    for (int retry = 0; retry < 20 && !wired; ++retry) {
      wired = detail::wire_stubs(stubs, rng, [&](NodeId a, NodeId b) { return community[a] != community[b]; },
                                 taken, edges);
    }
    if (!wired) continue;

    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.u, a.v) < std::pair(b.u, b.v);
    });
    DatasetBundle out{"lfr", Graph(n, std::move(edges)), Partition::from_labels(community), NodeIndex::identity(n)};
    return out;
  }
  throw GenerationError("lfr: no valid graph after " + std::to_string(cfg.max_attempts) + " attempts");
}

}  // namespace ccd
