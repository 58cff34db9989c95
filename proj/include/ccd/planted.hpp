#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/partition.hpp"
#include "ccd/random.hpp"

namespace ccd {

// Planted partition: groups of the given sizes, each pair joined with
// probability p_in inside a group and p_out across groups.
inline DatasetBundle planted_partition(const std::vector<std::size_t>& group_sizes, double p_in, double p_out,
                                       Seed seed) {
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw ValidationError("planted partition: probabilities must lie in [0, 1]");
  }
  std::vector<Label> labels;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) labels.insert(labels.end(), group_sizes[g], static_cast<Label>(g));
  const std::size_t n = labels.size();
  if (n == 0) throw ValidationError("planted partition: no nodes");
  Rng rng(derive_seed(seed, 0));
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (uniform01(rng) < (labels[u] == labels[v] ? p_in : p_out)) edges.push_back({u, v, 1.0});
    }
  }
  return {"planted", Graph(n, std::move(edges)), Partition::from_labels(labels), NodeIndex::identity(n)};
}

// k cliques of the given size joined in a ring by single edges.
inline DatasetBundle ring_of_cliques(std::size_t cliques, std::size_t size) {
  if (cliques == 0 || size == 0) throw ValidationError("ring of cliques: empty");
  std::vector<Label> labels;
  std::vector<Edge> edges;
  for (std::size_t c = 0; c < cliques; ++c) {
    const auto base = static_cast<NodeId>(c * size);
    for (NodeId i = 0; i < size; ++i) {
      labels.push_back(static_cast<Label>(c));
      for (NodeId j = i + 1; j < size; ++j) edges.push_back({base + i, base + j, 1.0});
    }
  }
  if (cliques > 1) {
    for (std::size_t c = 0; c < cliques; ++c) {
      const auto a = static_cast<NodeId>(c * size);
      const auto b = static_cast<NodeId>(((c + 1) % cliques) * size + (size > 1 ? 1 : 0));
      if (cliques == 2 && c == 1) break;
      edges.push_back({std::min(a, b), std::max(a, b), 1.0});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return std::pair(x.u, x.v) < std::pair(y.u, y.v); });
  const std::size_t n = labels.size();
  return {"cliques", Graph(n, std::move(edges)), Partition::from_labels(labels), NodeIndex::identity(n)};
}

}  // namespace ccd
