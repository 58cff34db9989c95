#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ccd/errors.hpp"
#include "ccd/log.hpp"

namespace ccd {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u;
  NodeId v;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node;
  double weight;
};

// Undirected simple graph on nodes [0, n) with positive edge weights.
// Edges are stored once in canonical (u < v) order and indexed by a CSR
// adjacency for O(deg) neighbor iteration. Immutable after construction.
class Graph {
 public:
  Graph() = default;

  // `edges` must be canonical, sorted, duplicate-free and self-loop-free with
  // positive finite weights; use GraphBuilder for arbitrary input.
  Graph(std::size_t node_count, std::vector<Edge> edges)
      : node_count_(node_count), edges_(std::move(edges)) {
    validate();
    build_adjacency();
  }

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  double total_weight() const noexcept { return total_weight_; }

  std::span<const Neighbor> neighbors(NodeId v) const noexcept {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  double weighted_degree(NodeId v) const noexcept { return strength_[v]; }

  // Position of v's first adjacency slot; slots [offset(v), offset(v+1)) are
  // v's neighbors. Gives every directed edge a stable index.
  std::size_t adjacency_offset(NodeId v) const noexcept { return offsets_[v]; }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.node_count_ == b.node_count_ && a.edges_ == b.edges_;
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      if (e.u >= e.v || e.v >= node_count_) {
        throw ValidationError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                              ") is not canonical or out of range");
      }
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw ValidationError("edge weights must be positive and finite");
      }
      if (i > 0 && !(std::pair(edges_[i - 1].u, edges_[i - 1].v) < std::pair(e.u, e.v))) {
        throw ValidationError("edges must be sorted and unique");
      }
    }
  }

  void build_adjacency() {
    offsets_.assign(node_count_ + 1, 0);
    strength_.assign(node_count_, 0.0);
    for (const Edge& e : edges_) {
      ++offsets_[e.u + 1];
      ++offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < node_count_; ++i) offsets_[i + 1] += offsets_[i];
    adjacency_.resize(2 * edges_.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    total_weight_ = 0.0;
    for (const Edge& e : edges_) {
      adjacency_[cursor[e.u]++] = {e.v, e.weight};
      adjacency_[cursor[e.v]++] = {e.u, e.weight};
      strength_[e.u] += e.weight;
      strength_[e.v] += e.weight;
      total_weight_ += e.weight;
    }
  }

  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::vector<double> strength_;
  double total_weight_ = 0.0;
};

// Accumulates weighted edges in any order. Duplicate pairs are merged by
// summing weights; self-loops are dropped. Both cases are reported through
// log_warning unless the builder is told they are expected.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::size_t node_count, bool warn_on_merge = true)
      : node_count_(node_count), warn_on_merge_(warn_on_merge) {}

  void add_edge(NodeId u, NodeId v, double weight = 1.0) {
    if (u >= node_count_ || v >= node_count_) {
      throw ValidationError("edge endpoint out of range");
    }
    if (weight < 0.0 || !std::isfinite(weight)) {
      throw ValidationError("edge weight must be nonnegative and finite");
    }
    if (u == v) {
      ++self_loops_;
      return;
    }
    if (u > v) std::swap(u, v);
    pending_.push_back({u, v, weight});
  }

  // Drops merged edges whose weight is zero or below `min_weight`.
  Graph build(double min_weight = 0.0) {
    std::stable_sort(pending_.begin(), pending_.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.u, a.v) < std::pair(b.u, b.v);
    });
    std::vector<Edge> merged;
    merged.reserve(pending_.size());
    std::size_t duplicates = 0;
    for (const Edge& e : pending_) {
      if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) {
        merged.back().weight += e.weight;
        ++duplicates;
      } else {
        merged.push_back(e);
      }
    }
    std::erase_if(merged, [&](const Edge& e) { return !(e.weight > 0.0) || e.weight < min_weight; });
    if (warn_on_merge_ && duplicates > 0) {
      log_warning("merged " + std::to_string(duplicates) + " duplicate edge(s) by summing weights");
    }
    if (warn_on_merge_ && self_loops_ > 0) {
      log_warning("dropped " + std::to_string(self_loops_) + " self-loop(s)");
    }
    pending_.clear();
    self_loops_ = 0;
    return Graph(node_count_, std::move(merged));
  }

 private:
  std::size_t node_count_;
  bool warn_on_merge_;
  std::vector<Edge> pending_;
  std::size_t self_loops_ = 0;
};

// Bidirectional map between external node labels (arbitrary strings) and
// contiguous internal ids.
class NodeIndex {
 public:
  NodeIndex() = default;

  // Assigns ids in order: numerically when every label is an integer,
  // lexicographically otherwise. Duplicates are collapsed.
  static NodeIndex from_labels(std::vector<std::string> labels) {
    const bool numeric = std::all_of(labels.begin(), labels.end(), is_integer);
    std::sort(labels.begin(), labels.end(), [numeric](const std::string& a, const std::string& b) {
      if (!numeric) return a < b;
      return compare_integers(a, b) < 0;
    });
    labels.erase(std::unique(labels.begin(), labels.end(), [numeric](const auto& a, const auto& b) {
                   return numeric ? compare_integers(a, b) == 0 : a == b;
                 }),
                 labels.end());
    NodeIndex index;
    for (auto& label : labels) index.insert(std::move(label));
    return index;
  }

  // Labels 0..n-1.
  static NodeIndex identity(std::size_t n) {
    NodeIndex index;
    for (std::size_t i = 0; i < n; ++i) index.insert(std::to_string(i));
    return index;
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(NodeId id) const { return labels_.at(id); }

  const NodeId* find(std::string_view label) const {
    auto it = ids_.find(std::string(label));
    if (it == ids_.end() && is_integer(label)) it = ids_.find(canonical_integer(label));
    return it == ids_.end() ? nullptr : &it->second;
  }

  NodeId insert(std::string label) {
    if (const NodeId* id = find(label)) return *id;
    const auto id = static_cast<NodeId>(labels_.size());
    if (is_integer(label)) label = canonical_integer(label);
    ids_.emplace(label, id);
    labels_.push_back(std::move(label));
    return id;
  }

  friend bool operator==(const NodeIndex& a, const NodeIndex& b) { return a.labels_ == b.labels_; }

 private:
  static bool is_integer(std::string_view s) {
    if (!s.empty() && s.front() == '-') s.remove_prefix(1);
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  }

  // "007" and "7" name the same node.
  static std::string canonical_integer(std::string_view s) {
    bool negative = !s.empty() && s.front() == '-';
    if (negative) s.remove_prefix(1);
    while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
    if (s == "0") negative = false;
    return (negative ? "-" : "") + std::string(s);
  }

  static int compare_integers(std::string_view a, std::string_view b) {
    const std::string ca = canonical_integer(a), cb = canonical_integer(b);
    const bool na = ca.front() == '-', nb = cb.front() == '-';
    if (na != nb) return na ? -1 : 1;
    std::string_view ma = ca, mb = cb;
    if (na) ma.remove_prefix(1), mb.remove_prefix(1);
    int cmp = ma.size() != mb.size() ? (ma.size() < mb.size() ? -1 : 1) : ma.compare(mb);
    if (cmp != 0) cmp = cmp < 0 ? -1 : 1;
    return na ? -cmp : cmp;
  }

  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> ids_;
};

}  // namespace ccd
