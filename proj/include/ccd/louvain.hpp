#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/partition.hpp"
#include "ccd/random.hpp"

namespace ccd {

// Objective driven by single-node moves. `for_each_candidate(v, f)` calls
// f(target, gain) for every community v may move to (never its own);
// `gain(v, target)` is the same quantity for an arbitrary target, and
// `value()` recomputes the full objective from scratch.
template <class O>
concept LocalMoveObjective = requires(O& o, const O& co, NodeId v, Label c) {
  { co.community_of(v) } -> std::convertible_to<Label>;
  { co.gain(v, c) } -> std::convertible_to<double>;
  o.for_each_candidate(v, [](Label, double) {});
  o.move(v, c);
  { co.value() } -> std::convertible_to<double>;
  { co.partition() } -> std::same_as<Partition>;
};

struct LouvainOptions {
  double min_gain = 1e-10;
  std::size_t max_sweeps = 1000;
};

// Sweeps `order` repeatedly, moving each node to the candidate with the
// largest gain above `min_gain` (ties: lowest label), until a full sweep
// makes no move. Returns the number of moves made.
template <LocalMoveObjective Objective>
std::size_t local_moves(Objective& obj, std::span<const NodeId> order, const LouvainOptions& opt = {}) {
  std::size_t moves = 0;
  for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    bool moved = false;
    for (NodeId v : order) {
      Label best = kUnassigned;
      double best_gain = opt.min_gain;
      obj.for_each_candidate(v, [&](Label target, double gain) {
        if (gain > best_gain || (gain == best_gain && best != kUnassigned && target < best)) {
          best = target;
          best_gain = gain;
        }
      });
      if (best != kUnassigned) {
        obj.move(v, best);
        moved = true;
        ++moves;
      }
    }
    if (!moved) break;
  }
  return moves;
}

// Single-node-move optimization of `obj` over `nodes` (no aggregation
// phase). The sweep order is a shuffle of `nodes` drawn from `seed`.
template <LocalMoveObjective Objective>
Partition louvain_with_objective(std::span<const NodeId> nodes, Objective& obj, Seed seed,
                                 const LouvainOptions& opt = {}) {
  std::vector<NodeId> order(nodes.begin(), nodes.end());
  Rng rng(derive_seed(seed, 0));
  shuffle(std::span(order), rng);
  local_moves(obj, std::span<const NodeId>(order), opt);
  return obj.partition();
}

namespace detail {

// Symmetric weighted network in adjacency-matrix convention: an undirected
// edge of weight w contributes w to A[u][v] and A[v][u]; self_loop[v] holds
// A[v][v] (twice the internal weight of an aggregated node).
struct WeightedNetwork {
  std::size_t node_count = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<Neighbor> adjacency;  // off-diagonal entries only
  std::vector<double> self_loop;
  std::vector<double> degree;  // row sums including the self loop
  double total = 0.0;          // sum of all entries, i.e. twice the total weight

  static WeightedNetwork from_graph(const Graph& g) {
    WeightedNetwork net;
    net.node_count = g.node_count();
    net.offsets.assign(g.node_count() + 1, 0);
    net.self_loop.assign(g.node_count(), 0.0);
    net.degree.assign(g.node_count(), 0.0);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      for (const Neighbor& nb : g.neighbors(v)) net.adjacency.push_back(nb);
      net.offsets[v + 1] = net.adjacency.size();
      net.degree[v] = g.weighted_degree(v);
      net.total += net.degree[v];
    }
    return net;
  }

  std::span<const Neighbor> neighbors(NodeId v) const {
    return {adjacency.data() + offsets[v], adjacency.data() + offsets[v + 1]};
  }

  // Collapses each community of `labels` (contiguous, total) into one node.
  WeightedNetwork aggregate(std::span<const Label> labels, std::size_t communities) const {
    std::vector<std::vector<std::pair<NodeId, double>>> rows(communities);
    WeightedNetwork out;
    out.node_count = communities;
    out.self_loop.assign(communities, 0.0);
    out.degree.assign(communities, 0.0);
    for (NodeId v = 0; v < node_count; ++v) {
      const auto c = static_cast<NodeId>(labels[v]);
      out.self_loop[c] += self_loop[v];
      for (const Neighbor& nb : neighbors(v)) {
        const auto d = static_cast<NodeId>(labels[nb.node]);
        if (d == c) {
          out.self_loop[c] += nb.weight;
        } else {
          rows[c].push_back({d, nb.weight});
        }
      }
    }
    out.offsets.assign(communities + 1, 0);
    for (NodeId c = 0; c < communities; ++c) {
      auto& row = rows[c];
      std::sort(row.begin(), row.end());
      for (std::size_t i = 0; i < row.size();) {
        std::size_t j = i;
        double w = 0.0;
        while (j < row.size() && row[j].first == row[i].first) w += row[j++].second;
        out.adjacency.push_back({row[i].first, w});
        i = j;
      }
      out.offsets[c + 1] = out.adjacency.size();
    }
    for (NodeId c = 0; c < communities; ++c) {
      out.degree[c] = out.self_loop[c];
      for (const Neighbor& nb : out.neighbors(c)) out.degree[c] += nb.weight;
      out.total += out.degree[c];
    }
    return out;
  }
};

}  // namespace detail

// Newman-Girvan modularity of a total partition of a weighted network, with
// incremental per-community degree totals for O(deg) move gains.
class ModularityObjective {
 public:
  ModularityObjective(const detail::WeightedNetwork& net, const Partition& init)
      : net_(&net), labels_(init.labels().begin(), init.labels().end()) {
    if (init.size() != net.node_count || !init.is_total()) {
      throw ValidationError("modularity objective needs a total partition of the network");
    }
    const std::size_t label_space = std::max(net.node_count, init.community_count());
    community_degree_.assign(label_space, 0.0);
    scratch_.assign(label_space, 0.0);
    for (NodeId v = 0; v < net.node_count; ++v) community_degree_[labels_[v]] += net.degree[v];
  }

  Label community_of(NodeId v) const { return labels_[v]; }

  double gain(NodeId v, Label target) const {
    const Label from = labels_[v];
    if (target == from || net_->total == 0.0) return 0.0;
    double to_from = 0.0, to_target = 0.0;
    for (const Neighbor& nb : net_->neighbors(v)) {
      if (labels_[nb.node] == from) to_from += nb.weight;
      if (labels_[nb.node] == target) to_target += nb.weight;
    }
    return move_gain(v, from, target, to_from, to_target);
  }

  // Candidates are the communities of v's neighbors.
  template <class F>
  void for_each_candidate(NodeId v, F&& f) {
    const Label from = labels_[v];
    touched_.clear();
    for (const Neighbor& nb : net_->neighbors(v)) {
      const Label c = labels_[nb.node];
      if (scratch_[c] == 0.0) touched_.push_back(c);
      scratch_[c] += nb.weight;
    }
    const double to_from = scratch_[from];
    if (net_->total > 0.0) {
      for (Label c : touched_) {
        if (c != from) f(c, move_gain(v, from, c, to_from, scratch_[c]));
      }
    }
    for (Label c : touched_) scratch_[c] = 0.0;
  }

  void move(NodeId v, Label target) {
    community_degree_[labels_[v]] -= net_->degree[v];
    community_degree_[target] += net_->degree[v];
    labels_[v] = target;
  }

  double value() const {
    if (net_->total == 0.0) throw DomainError("modularity is undefined for a graph without edges");
    std::vector<double> inside(community_degree_.size(), 0.0), tot(community_degree_.size(), 0.0);
    for (NodeId v = 0; v < net_->node_count; ++v) {
      inside[labels_[v]] += net_->self_loop[v];
      tot[labels_[v]] += net_->degree[v];
      for (const Neighbor& nb : net_->neighbors(v)) {
        if (labels_[nb.node] == labels_[v]) inside[labels_[v]] += nb.weight;
      }
    }
    double q = 0.0;
    for (std::size_t c = 0; c < tot.size(); ++c) {
      q += inside[c] / net_->total - (tot[c] / net_->total) * (tot[c] / net_->total);
    }
    return q;
  }

  Partition partition() const { return Partition::from_labels(labels_); }

 private:
  double move_gain(NodeId v, Label from, Label target, double to_from, double to_target) const {
    const double k = net_->degree[v], total = net_->total;
    return 2.0 * (to_target - to_from) / total -
           2.0 * k * (community_degree_[target] - community_degree_[from] + k) / (total * total);
  }

  const detail::WeightedNetwork* net_;
  std::vector<Label> labels_;
  std::vector<double> community_degree_;
  std::vector<double> scratch_;
  std::vector<Label> touched_;
};

// Q = sum_c (e_c / W - (d_c / 2W)^2) for internal weight e_c, community
// weighted degree d_c and total weight W.
inline double modularity(const Graph& g, const Partition& p) {
  if (p.size() != g.node_count() || !p.is_total()) {
    throw ValidationError("modularity: partition must cover every node");
  }
  if (g.total_weight() == 0.0) throw DomainError("modularity is undefined for a graph without edges");
  const auto net = detail::WeightedNetwork::from_graph(g);
  return ModularityObjective(net, p).value();
}

// Two-phase Louvain: local moves until no positive gain, then aggregation of
// communities into nodes, repeated until a level makes no move. The sweep
// order of level l is a shuffle drawn from derive_seed(seed, l).
inline Partition louvain_modularity(const Graph& g, Seed seed, const LouvainOptions& opt = {}) {
  std::vector<Label> membership(g.node_count());
  std::iota(membership.begin(), membership.end(), 0);
  if (g.node_count() == 0 || g.total_weight() == 0.0) return Partition::from_labels(membership);

  auto net = detail::WeightedNetwork::from_graph(g);
  for (std::uint64_t level = 0;; ++level) {
    ModularityObjective obj(net, Partition::singletons(net.node_count));
    std::vector<NodeId> order(net.node_count);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, level));
    shuffle(std::span(order), rng);
    if (local_moves(obj, std::span<const NodeId>(order), opt) == 0) break;
    const Partition level_partition = obj.partition();
    for (Label& m : membership) m = level_partition[static_cast<NodeId>(m)];
    net = net.aggregate(level_partition.labels(), level_partition.community_count());
  }
  return Partition::from_labels(membership);
}

// Louvain restricted to `nodes`: all other nodes are left unassigned.
inline Partition louvain_modularity_on(const Graph& g, std::span<const NodeId> nodes, Seed seed,
                                       const LouvainOptions& opt = {}) {
  return restrict_partition(louvain_modularity(g, seed, opt), nodes);
}

}  // namespace ccd
